//! Empirical check of `|Pf|₁ ≤ η|f|₁ + D‖f‖₁` for given observables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{seminorm_nodes, small_eps_seminorm_from_samples, StatsError};
use crate::transfer::{AveragedOperator, LYConstants, Observable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LYCheckRow {
    pub f_seminorm: f64,
    pub f_resolution: f64,
    pub f_l1: f64,
    pub pf_seminorm: f64,
    pub pf_resolution: f64,
    /// `η|f|₁ + D‖f‖₁` plus the resolution errors of both estimates.
    pub bound: f64,
    pub holds: bool,
}

/// Trapezoid rule on the closed node grid of `Π[−w_a, w_a]`.
fn trapezoid_abs(samples: &[f64], half_widths: &[f64], nodes: &[usize]) -> f64 {
    let cell: f64 = half_widths
        .iter()
        .zip(nodes)
        .map(|(&w, &n)| 2.0 * w / (n - 1) as f64)
        .product();
    samples
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            let mut r = flat;
            let mut weight = 1.0;
            for &n in nodes {
                let i = r % n;
                r /= n;
                if i == 0 || i == n - 1 {
                    weight *= 0.5;
                }
            }
            weight * v.abs()
        })
        .sum::<f64>()
        * cell
}

/// Estimate both seminorms by the small-radius total-variation limit on a
/// node grid of `Ω` and compare against the Lasota–Yorke bound.
pub fn lasota_yorke_check(
    op: &AveragedOperator<'_>,
    constants: &LYConstants,
    fs: &[&dyn Observable],
    nodes: &[usize],
) -> Result<Vec<LYCheckRow>, StatsError> {
    let model = op.model();
    let half_widths: Vec<f64> = (0..model.k()).map(|i| model.half_width(i)).collect();
    let pts = seminorm_nodes(&half_widths, nodes);
    let pf: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|y| op.apply_all(fs, y))
        .collect::<Result<_, _>>()?;
    fs.iter()
        .enumerate()
        .map(|(m, f)| {
            let fv: Vec<f64> = pts.iter().map(|u| f.at(u)).collect();
            let pv: Vec<f64> = pf.iter().map(|row| row[m]).collect();
            let fs = small_eps_seminorm_from_samples(&fv, &half_widths, nodes)?;
            let ps = small_eps_seminorm_from_samples(&pv, &half_widths, nodes)?;
            let f_l1 = trapezoid_abs(&fv, &half_widths, nodes);
            let bound = constants.eta * (fs.value + fs.resolution_error)
                + constants.d_const * f_l1
                + ps.resolution_error;
            Ok(LYCheckRow {
                f_seminorm: fs.value,
                f_resolution: fs.resolution_error,
                f_l1,
                pf_seminorm: ps.value,
                pf_resolution: ps.resolution_error,
                bound,
                holds: ps.value <= bound,
            })
        })
        .collect()
}
