//! Marginal densities of the scalar process and their empirical
//! counterparts.

use serde::{Deserialize, Serialize};

use super::{StatsError, Trajectory};
use crate::model::Model;
use crate::ulam::DensityGrid;

/// Density of `X` on a uniform grid of `[−L, L]`, read off one axis of a
/// density on `Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal1D {
    /// One-based axis the marginal was taken from.
    pub axis: usize,
    pub l: f64,
    /// Cell centers.
    pub t: Vec<f64>,
    pub density: Vec<f64>,
}

impl Marginal1D {
    pub fn bins(&self) -> usize {
        self.t.len()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.l / self.bins() as f64
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }

    /// `∫|ρ − ρ'|` of the two step functions; bin counts may differ.
    pub fn l1_distance(&self, other: &Marginal1D) -> Result<f64, StatsError> {
        if self.l != other.l {
            return Err(StatsError::Invalid(
                "marginals live on different intervals".into(),
            ));
        }
        if self.bins() == other.bins() {
            let s: f64 = self
                .density
                .iter()
                .zip(&other.density)
                .map(|(a, b)| (a - b).abs())
                .sum();
            return Ok(s * self.bin_width());
        }
        let edges = |n: usize| (0..=n).map(move |i| -self.l + 2.0 * self.l * i as f64 / n as f64);
        let mut cuts: Vec<f64> = edges(self.bins()).chain(edges(other.bins())).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            total += (self.at(mid) - other.at(mid)).abs() * (w[1] - w[0]);
        }
        Ok(total)
    }

    fn at(&self, t: f64) -> f64 {
        let b = (((t + self.l) / self.bin_width()) as usize).min(self.bins() - 1);
        self.density[b]
    }

    /// Density histogram of `samples` on this marginal's grid. Values at
    /// `L` fall in the last bin.
    pub fn histogram<'a>(&self, samples: impl IntoIterator<Item = &'a f64>) -> Marginal1D {
        let n = self.bins();
        let h = self.bin_width();
        let mut counts = vec![0u64; n];
        let mut total = 0u64;
        for &v in samples {
            let b = (((v + self.l) / h) as usize).min(n - 1);
            counts[b] += 1;
            total += 1;
        }
        let density = counts
            .iter()
            .map(|&c| c as f64 / (total.max(1) as f64 * h))
            .collect();
        Marginal1D {
            axis: 0,
            l: self.l,
            t: self.t.clone(),
            density,
        }
    }
}

/// The law of `X` read from slot `axis` (one-based) of `h`:
/// `t ↦ γ^{j−1}·ρ_j(γ^{j−1}t)` with `ρ_j` the `j`-th coordinate marginal.
pub fn marginal_density(
    h: &DensityGrid,
    model: &Model,
    axis: usize,
) -> Result<Marginal1D, StatsError> {
    let grid = &h.grid;
    let k = grid.dim();
    if axis == 0 || axis > k {
        return Err(StatsError::Invalid(format!("axis {axis} outside 1..={k}")));
    }
    let a = axis - 1;
    let n = grid.counts[a];
    let mut slab = vec![0.0; n];
    let stride: usize = grid.counts[..a].iter().product();
    for (idx, v) in h.values.iter().enumerate() {
        slab[(idx / stride) % n] += v;
    }
    // slab mass divided by the cell width of u_j, then rescaled to t
    let transverse = grid.box_volume / grid.box_size[a];
    let scale = model.gamma_pow(a);
    let l = model.l();
    let density = slab.iter().map(|s| s * transverse * scale).collect();
    let t = (0..n)
        .map(|m| -l + (m as f64 + 0.5) * 2.0 * l / n as f64)
        .collect();
    Ok(Marginal1D {
        axis,
        l,
        t,
        density,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalComparison {
    pub l1: f64,
    pub samples: usize,
    pub burn_in: usize,
    pub histogram: Marginal1D,
}

/// `L¹` distance between the histogram of `X_n`, `n ≥ burn_in`, and
/// `marginal`.
pub fn empirical_vs_stationary(
    traj: &Trajectory,
    marginal: &Marginal1D,
    burn_in: usize,
) -> Result<EmpiricalComparison, StatsError> {
    let len = traj.x.len();
    if len == 0 || traj.steps() == 0 {
        return Err(StatsError::Invalid("empty trajectory".into()));
    }
    if len < 10 * burn_in {
        return Err(StatsError::Invalid(format!(
            "trajectory of {len} values is shorter than 10 x burn-in {burn_in}"
        )));
    }
    let samples = &traj.x[burn_in..];
    let histogram = marginal.histogram(samples);
    let l1 = histogram.l1_distance(marginal)?;
    Ok(EmpiricalComparison {
        l1,
        samples: samples.len(),
        burn_in,
        histogram,
    })
}
