//! Sparse row-stochastic matrices in CSR form with a cached transpose.

use rayon::prelude::*;

use super::UlamError;

/// Forward transition probabilities: entry `(i, j)` is the chance of moving
/// from box `i` to box `j`. Densities are row vectors and update as `p ↦ pM`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    // the same entries grouped by column, for the left action
    col_ptr: Vec<usize>,
    t_rows: Vec<usize>,
    t_vals: Vec<f64>,
    /// Largest `|Σ_j M_ij − 1|` before normalization.
    pub max_row_drift: f64,
}

/// Tolerated row-sum error before normalization.
pub const ROW_DRIFT_TOLERANCE: f64 = 1e-6;

impl StochasticMatrix {
    /// Build from per-row `(column, weight)` lists, merging duplicates and
    /// normalizing each row to sum 1.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self, UlamError> {
        Self::from_rows_with_tolerance(rows, ROW_DRIFT_TOLERANCE)
    }

    pub fn from_rows_with_tolerance(
        rows: Vec<Vec<(usize, f64)>>,
        tolerance: f64,
    ) -> Result<Self, UlamError> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut max_row_drift: f64 = 0.0;
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            let start = cols.len();
            for (c, v) in row {
                if c >= n {
                    return Err(UlamError::Invalid(format!(
                        "column {c} out of range in row {i}"
                    )));
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(UlamError::Invalid(format!(
                        "entry ({i}, {c}) = {v} is not a probability"
                    )));
                }
                if v == 0.0 {
                    continue;
                }
                if cols.len() > start && cols[cols.len() - 1] == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            let sum: f64 = vals[start..].iter().sum();
            max_row_drift = max_row_drift.max((sum - 1.0).abs());
            if (sum - 1.0).abs() > tolerance {
                return Err(UlamError::Invalid(format!("row {i} sums to {sum}")));
            }
            vals[start..].iter_mut().for_each(|v| *v /= sum);
            row_ptr.push(cols.len());
        }

        let mut counts = vec![0usize; n + 1];
        for &c in &cols {
            counts[c + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut t_rows = vec![0; cols.len()];
        let mut t_vals = vec![0.0; cols.len()];
        for i in 0..n {
            for e in row_ptr[i]..row_ptr[i + 1] {
                let c = cols[e];
                t_rows[fill[c]] = i;
                t_vals[fill[c]] = vals[e];
                fill[c] += 1;
            }
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
            col_ptr,
            t_rows,
            t_vals,
            max_row_drift,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, UlamError> {
        Self::from_rows(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .copied()
                        .enumerate()
                        .filter(|e| e.1 != 0.0)
                        .collect()
                })
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect()).expect("identity is stochastic")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |p| v[p])
    }

    /// `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    /// Largest `|Σ_j M_ij − 1|` after normalization.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.row(i).1.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `out = pM`. Each entry is summed in a fixed order, so the result does
    /// not depend on the thread count.
    pub fn left_mul(&self, p: &[f64], out: &mut [f64]) {
        out.par_iter_mut()
            .enumerate()
            .with_min_len(256)
            .for_each(|(j, o)| {
                let r = self.col_ptr[j]..self.col_ptr[j + 1];
                *o = self.t_rows[r.clone()]
                    .iter()
                    .zip(&self.t_vals[r])
                    .map(|(&i, &v)| p[i] * v)
                    .sum();
            });
    }

    /// `out = Mv`.
    pub fn right_mul(&self, v: &[f64], out: &mut [f64]) {
        out.par_iter_mut()
            .enumerate()
            .with_min_len(256)
            .for_each(|(i, o)| {
                let (c, w) = self.row(i);
                *o = c.iter().zip(w).map(|(&j, &x)| x * v[j]).sum();
            });
    }
}
