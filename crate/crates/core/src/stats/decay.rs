//! Decay of correlations under the stationary measure, computed through
//! powers of the Ulam matrix.

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::ulam::{DensityGrid, StochasticMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Per-step rate `Λ`, absent when fewer than two covariances clear the
    /// noise floor.
    pub lambda: Option<f64>,
    /// `cov(f∘Tⁿ, h)` for `n = 0..=n_max`.
    pub covariances: Vec<f64>,
    /// Steps used in the fit.
    pub fitted: Vec<usize>,
    pub noise_floor: f64,
    pub note: String,
}

/// `cov_μ(f∘Tⁿ, h) = ∫ f̃ · ((h̃·h*) Mⁿ) dm` with `dμ = h* dm` and `f̃, h̃`
/// the observables centered under `μ`, and the exponential rate fitted by
/// least squares to `log|cov|`.
///
/// Centering keeps the large means out of the sums, so what remains below
/// the noise floor is rounding. Every lag `n ≥ 1` above the floor enters
/// the fit: for the skew-product models lags can vanish exactly and then
/// reappear, and the later lags carry the asymptotic rate.
pub fn correlation_decay(
    matrix: &StochasticMatrix,
    h_star: &DensityGrid,
    f: &[f64],
    h: &[f64],
    n_max: usize,
) -> Result<DecayFit, StatsError> {
    let n = h_star.values.len();
    if matrix.dim() != n || f.len() != n || h.len() != n {
        return Err(StatsError::Invalid(
            "test functions, density and matrix differ in size".into(),
        ));
    }
    if n_max < 4 {
        return Err(StatsError::Invalid(format!("n_max = {n_max} below 4")));
    }
    let vol = h_star.grid.box_volume;
    let hs = &h_star.values;
    let mass = hs.iter().sum::<f64>() * vol;
    let mean = |g: &[f64]| g.iter().zip(hs).map(|(a, b)| a * b).sum::<f64>() * vol / mass;
    let (mf, mh) = (mean(f), mean(h));
    let fc: Vec<f64> = f.iter().map(|v| v - mf).collect();

    let mut g: Vec<f64> = h.iter().zip(hs).map(|(a, b)| (a - mh) * b).collect();
    let mut next = vec![0.0; n];
    let mut covariances = Vec::with_capacity(n_max + 1);
    for step in 0..=n_max {
        covariances.push(fc.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() * vol);
        if step < n_max {
            matrix.left_mul(&g, &mut next);
            std::mem::swap(&mut g, &mut next);
        }
    }

    let sup = |v: &[f64], m: f64| v.iter().fold(0.0f64, |s, x| s.max((x - m).abs()));
    let noise_floor = 1e3 * f64::EPSILON * (sup(f, mf) * sup(h, mh)).max(f64::MIN_POSITIVE);
    let fitted: Vec<usize> = (1..=n_max)
        .filter(|&s| covariances[s].abs() > noise_floor)
        .collect();
    let (lambda, note) = if fitted.len() < 2 {
        (
            None,
            "decay too fast to fit: fewer than two lags clear the noise floor".to_string(),
        )
    } else {
        let xs: Vec<f64> = fitted.iter().map(|&s| s as f64).collect();
        let ys: Vec<f64> = fitted.iter().map(|&s| covariances[s].abs().ln()).collect();
        let m = xs.len() as f64;
        let (sx, sy) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - sx) * (y - sy)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - sx).powi(2)).sum();
        (
            Some((sxy / sxx).exp()),
            format!("least-squares fit of log|cov| over {} lags", fitted.len()),
        )
    };
    Ok(DecayFit {
        lambda,
        covariances,
        fitted,
        noise_floor,
        note,
    })
}
