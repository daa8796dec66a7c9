//! Anisotropic box partitions of `Ω` and piecewise-constant functions on
//! them.

use serde::{Deserialize, Serialize};

use super::UlamError;
use crate::model::Model;
use crate::transfer::Observable;

/// Default ceiling on the number of boxes.
pub const MAX_BOXES: usize = 1 << 24;

/// Tensor partition of `Π [−w_i, w_i]` into half-open boxes. Axis 0 varies
/// fastest in the flat index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub counts: Vec<usize>,
    pub half_widths: Vec<f64>,
    pub box_size: Vec<f64>,
    pub box_volume: f64,
    pub total: usize,
}

impl Grid {
    pub fn new(
        half_widths: Vec<f64>,
        counts: Vec<usize>,
        max_boxes: usize,
    ) -> Result<Self, UlamError> {
        if counts.len() != half_widths.len() || counts.is_empty() {
            return Err(UlamError::Invalid("one box count per axis required".into()));
        }
        if let Some(c) = counts.iter().find(|&&c| c < 2) {
            return Err(UlamError::Invalid(format!("box count {c} below 2")));
        }
        let total = counts
            .iter()
            .try_fold(1usize, |acc, &n| {
                acc.checked_mul(n).filter(|&t| t <= max_boxes)
            })
            .ok_or_else(|| UlamError::Invalid(format!("grid exceeds {max_boxes} boxes")))?;
        let box_size: Vec<f64> = half_widths
            .iter()
            .zip(&counts)
            .map(|(w, &n)| 2.0 * w / n as f64)
            .collect();
        let box_volume = box_size.iter().product();
        Ok(Self {
            counts,
            half_widths,
            box_size,
            box_volume,
            total,
        })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    /// `Π 2w_i`.
    pub fn domain_volume(&self) -> f64 {
        self.half_widths.iter().map(|w| 2.0 * w).product()
    }

    /// Cell index along `axis`, with the top face folded into the last cell.
    #[inline]
    pub fn cell(&self, axis: usize, v: f64) -> Option<usize> {
        let w = self.half_widths[axis];
        let n = self.counts[axis];
        let t = (v + w) / self.box_size[axis];
        if !(t >= 0.0) || v > w * (1.0 + 1e-12) {
            return None;
        }
        Some((t as usize).min(n - 1))
    }

    /// Flat index of the box containing `u`, if `u` lies in the closed domain.
    #[inline]
    pub fn locate(&self, u: &[f64]) -> Option<usize> {
        let mut idx = 0;
        let mut stride = 1;
        for (axis, &v) in u.iter().enumerate() {
            idx += self.cell(axis, v)? * stride;
            stride *= self.counts[axis];
        }
        Some(idx)
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&n| {
                let m = idx % n;
                idx /= n;
                m
            })
            .collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (m, n) in multi.iter().zip(&self.counts) {
            idx += m * stride;
            stride *= n;
        }
        idx
    }

    /// Lower corner of box `idx`.
    pub fn lower(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(a, &m)| -self.half_widths[a] + m as f64 * self.box_size[a])
            .collect()
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        self.lower(idx)
            .iter()
            .zip(&self.box_size)
            .map(|(l, h)| l + 0.5 * h)
            .collect()
    }

    /// The `counts[axis] + 1` cell boundaries along `axis`.
    pub fn edges(&self, axis: usize) -> Vec<f64> {
        let w = self.half_widths[axis];
        let n = self.counts[axis];
        (0..=n)
            .map(|m| {
                if m == n {
                    w
                } else {
                    -w + m as f64 * self.box_size[axis]
                }
            })
            .collect()
    }

    /// Largest box diameter.
    pub fn box_diameter(&self) -> f64 {
        self.box_size.iter().map(|h| h * h).sum::<f64>().sqrt()
    }
}

/// A grid over `Ω` with the given per-axis counts.
pub fn build_grid(model: &Model, counts: &[usize]) -> Result<Grid, UlamError> {
    build_grid_limited(model, counts, MAX_BOXES)
}

pub fn build_grid_limited(
    model: &Model,
    counts: &[usize],
    max_boxes: usize,
) -> Result<Grid, UlamError> {
    if counts.len() != model.k() {
        return Err(UlamError::Invalid(format!(
            "expected {} box counts, got {}",
            model.k(),
            counts.len()
        )));
    }
    Grid::new(model.geometry.omega.clone(), counts.to_vec(), max_boxes)
}

/// Piecewise-constant function on a [`Grid`], zero outside the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, UlamError> {
        if values.len() != grid.total {
            return Err(UlamError::Invalid(format!(
                "{} values for {} boxes",
                values.len(),
                grid.total
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let values = vec![c; grid.total];
        Self { grid, values }
    }

    /// The uniform probability density `1/m(Ω)`.
    pub fn uniform(grid: Grid) -> Self {
        let c = 1.0 / grid.domain_volume();
        Self::constant(grid, c)
    }

    /// Box averages of `f` by the midpoint rule with `s` points per axis.
    pub fn project(grid: Grid, f: &dyn Fn(&[f64]) -> f64, s: usize) -> Self {
        let k = grid.dim();
        let s = s.max(1);
        let sub = s.pow(k as u32);
        let values = (0..grid.total)
            .map(|idx| {
                let lo = grid.lower(idx);
                let mut u = vec![0.0; k];
                let mut acc = 0.0;
                for flat in 0..sub {
                    let mut rest = flat;
                    for a in 0..k {
                        u[a] = lo[a] + ((rest % s) as f64 + 0.5) / s as f64 * grid.box_size[a];
                        rest /= s;
                    }
                    acc += f(&u);
                }
                acc / sub as f64
            })
            .collect();
        Self { grid, values }
    }

    /// `∫ f dm`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.box_volume
    }

    /// `∫ |f| dm`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.box_volume
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ |f − g| dm` on a shared grid.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.box_volume
    }

    /// Rescale to unit integral.
    pub fn normalized(mut self) -> Self {
        let s = self.integral();
        if s != 0.0 {
            self.values.iter_mut().for_each(|v| *v /= s);
        }
        self
    }
}

impl Observable for DensityGrid {
    #[inline]
    fn at(&self, u: &[f64]) -> f64 {
        self.grid.locate(u).map_or(0.0, |i| self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::reference;

    #[test]
    fn reference_grid_shape() {
        let m = reference();
        let g = build_grid(&m, &[64, 64]).unwrap();
        assert_eq!(g.total, 4096);
        assert!((g.box_size[0] - 1.0 / 32.0).abs() < 1e-15);
        assert!((g.box_size[1] - m.gamma() / 32.0).abs() < 1e-15);
        let exact = 4.0 * m.gamma();
        assert!((g.box_volume * g.total as f64 - exact).abs() < 1e-14);
        assert!((g.domain_volume() - m.omega_volume()).abs() < 1e-15);
        assert!(build_grid(&m, &[1, 64]).is_err());
        assert!(build_grid_limited(&m, &[64, 64], 1000).is_err());
    }

    #[test]
    fn index_round_trip_and_faces() {
        let g = Grid::new(vec![1.0, 0.5, 2.0], vec![3, 4, 5], MAX_BOXES).unwrap();
        for idx in 0..g.total {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
            assert_eq!(g.locate(&g.center(idx)), Some(idx));
            assert_eq!(g.locate(&g.lower(idx)), Some(idx));
        }
        assert_eq!(g.locate(&[1.0, 0.5, 2.0]), Some(g.total - 1));
        assert_eq!(g.locate(&[1.01, 0.0, 0.0]), None);
        assert_eq!(g.locate(&[-1.01, 0.0, 0.0]), None);
    }

    #[test]
    fn uniform_density_integrates_to_one() {
        let g = Grid::new(vec![1.0, 0.1], vec![8, 8], MAX_BOXES).unwrap();
        let d = DensityGrid::uniform(g);
        assert!((d.integral() - 1.0).abs() < 1e-14);
        assert!((d.at(&[0.3, 0.05]) - 2.5).abs() < 1e-12);
        assert_eq!(d.at(&[0.3, 0.2]), 0.0);
    }
}
