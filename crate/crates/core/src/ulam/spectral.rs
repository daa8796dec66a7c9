//! Stationary density and subdominant eigenvalue of an Ulam matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DensityGrid, Grid, StochasticMatrix, UlamError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationaryOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Length of each Cesàro averaging round.
    pub cesaro_window: usize,
    pub cesaro_rounds: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            cesaro_window: 256,
            cesaro_rounds: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stationary {
    pub density: DensityGrid,
    /// `‖h*M − h*‖₁` of the returned density.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cesaro: DensityGrid,
    pub cesaro_rounds: usize,
    pub cesaro_residual: f64,
    /// `‖h*_power − h*_Cesàro‖₁`.
    pub discrepancy: f64,
}

fn l1(a: &[f64], b: &[f64], vol: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * vol
}

fn renormalize(v: &mut [f64], vol: f64) {
    let s: f64 = v.iter().sum::<f64>() * vol;
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

/// Power iteration from the uniform density, cross-checked by repeated
/// Cesàro averaging `c ↦ (1/W) Σ_{m<W} cM^m`, which converges to the same
/// projection even when `M` has other eigenvalues of modulus one.
pub fn stationary_density(
    matrix: &StochasticMatrix,
    grid: &Grid,
    options: &StationaryOptions,
) -> Result<Stationary, UlamError> {
    let n = grid.total;
    if matrix.dim() != n {
        return Err(UlamError::Invalid(format!(
            "matrix of size {} for {} boxes",
            matrix.dim(),
            n
        )));
    }
    let vol = grid.box_volume;
    let uniform = vec![1.0 / grid.domain_volume(); n];

    let mut p = uniform.clone();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        matrix.left_mul(&p, &mut next);
        iterations += 1;
        renormalize(&mut next, vol);
        residual = l1(&next, &p, vol);
        std::mem::swap(&mut p, &mut next);
        if residual <= options.tolerance {
            break;
        }
    }
    matrix.left_mul(&p, &mut next);
    residual = residual.min(l1(&next, &p, vol));
    let converged = residual <= options.tolerance;

    let mut c = uniform;
    let mut acc = vec![0.0; n];
    let mut rounds = 0;
    let mut cesaro_residual = f64::INFINITY;
    while rounds < options.cesaro_rounds {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut q = c.clone();
        for _ in 0..options.cesaro_window {
            acc.iter_mut().zip(&q).for_each(|(a, x)| *a += x);
            matrix.left_mul(&q, &mut next);
            std::mem::swap(&mut q, &mut next);
        }
        acc.iter_mut()
            .for_each(|a| *a /= options.cesaro_window as f64);
        renormalize(&mut acc, vol);
        rounds += 1;
        let change = l1(&acc, &c, vol);
        std::mem::swap(&mut c, &mut acc);
        matrix.left_mul(&c, &mut next);
        cesaro_residual = l1(&next, &c, vol);
        if change <= options.tolerance || cesaro_residual <= options.tolerance {
            break;
        }
    }

    let discrepancy = l1(&p, &c, vol);
    Ok(Stationary {
        density: DensityGrid::new(grid.clone(), p)?,
        residual,
        iterations,
        converged,
        cesaro: DensityGrid::new(grid.clone(), c)?,
        cesaro_rounds: rounds,
        cesaro_residual,
        discrepancy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubdominantOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Iterations entering the geometric mean.
    pub window: usize,
    pub seed: u64,
}

impl Default for SubdominantOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iterations: 400,
            window: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subdominant {
    pub modulus: f64,
    pub per_restart: Vec<f64>,
    pub iterations: Vec<usize>,
    pub note: String,
}

/// `|λ₂|` by power iteration of the left action on zero-sum vectors, the
/// invariant complement of the stationary direction.
///
/// Start vectors have small integer entries, so matrices with dyadic
/// entries are iterated exactly and nilpotent parts vanish to zero.
pub fn subdominant_modulus(
    matrix: &StochasticMatrix,
    h_star: &[f64],
    options: &SubdominantOptions,
) -> Result<Subdominant, UlamError> {
    let n = matrix.dim();
    if h_star.len() != n {
        return Err(UlamError::Invalid(format!(
            "stationary vector of length {} for dimension {n}",
            h_star.len()
        )));
    }
    if n < 2 {
        return Ok(Subdominant {
            modulus: 0.0,
            per_restart: vec![],
            iterations: vec![],
            note: "one state".into(),
        });
    }
    let h_sum: f64 = h_star.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut per_restart = Vec::with_capacity(options.restarts);
    let mut iterations = Vec::with_capacity(options.restarts);
    let mut next = vec![0.0; n];
    let window = options.window.max(1);

    for _ in 0..options.restarts.max(1) {
        let mut v: Vec<f64> = (0..n - 1)
            .map(|_| rng.random_range(-8i32..=8) as f64)
            .collect();
        let last: f64 = -v.iter().sum::<f64>();
        v.push(last);
        if v.iter().all(|&x| x == 0.0) {
            v[0] = 1.0;
            v[n - 1] = -1.0;
        }
        let mut logs: Vec<f64> = Vec::new();
        let mut estimate = f64::NAN;
        let mut iters = 0;
        let mut norm = v.iter().map(|x| x.abs()).sum::<f64>();
        while iters < options.max_iterations {
            matrix.left_mul(&v, &mut next);
            iters += 1;
            // drop the drift along h* that rounding reintroduces
            let s: f64 = next.iter().sum();
            if s != 0.0 {
                next.iter_mut()
                    .zip(h_star)
                    .for_each(|(x, h)| *x -= s * h / h_sum);
            }
            let new_norm = next.iter().map(|x| x.abs()).sum::<f64>();
            if new_norm == 0.0 || new_norm < 1e-300 * norm {
                estimate = 0.0;
                break;
            }
            logs.push((new_norm / norm).ln());
            // rescale by a power of two to keep the entries exact
            let scale = (new_norm.log2().round()).exp2();
            next.iter_mut().for_each(|x| *x /= scale);
            norm = new_norm / scale;
            std::mem::swap(&mut v, &mut next);
            if logs.len() >= 2 * window {
                let tail = &logs[logs.len() - window..];
                let prev = &logs[logs.len() - 2 * window..logs.len() - window];
                let a = (tail.iter().sum::<f64>() / window as f64).exp();
                let b = (prev.iter().sum::<f64>() / window as f64).exp();
                estimate = a;
                if (a - b).abs() <= 1e-6 * a.max(1e-12) {
                    break;
                }
            }
        }
        if estimate.is_nan() {
            let w = logs.len().min(window).max(1);
            estimate = (logs[logs.len() - w..].iter().sum::<f64>() / w as f64).exp();
        }
        per_restart.push(estimate.min(1.0));
        iterations.push(iters);
    }
    let modulus = per_restart.iter().cloned().fold(0.0, f64::max);
    let note = format!(
        "geometric-mean growth over the last {window} iterations, maximum over {} restarts",
        per_restart.len()
    );
    Ok(Subdominant {
        modulus,
        per_restart,
        iterations,
        note,
    })
}

/// Leading eigenvalue, stationary density and gap of an Ulam matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub leading_eigenvalue: f64,
    pub stationary: Stationary,
    pub subdominant_modulus: f64,
    pub gap: f64,
    /// `|λ₂|` is separated from one by more than `1e-6`.
    pub gap_found: bool,
    pub subdominant: Subdominant,
}

pub fn spectral_report(
    matrix: &StochasticMatrix,
    grid: &Grid,
    stationary: &StationaryOptions,
    subdominant: &SubdominantOptions,
) -> Result<SpectralReport, UlamError> {
    let st = stationary_density(matrix, grid, stationary)?;
    let h = &st.density.values;
    let mut hm = vec![0.0; h.len()];
    matrix.left_mul(h, &mut hm);
    let num: f64 = hm.iter().zip(h).map(|(a, b)| a * b).sum();
    let den: f64 = h.iter().map(|b| b * b).sum();
    let sub = subdominant_modulus(matrix, h, subdominant)?;
    let gap = 1.0 - sub.modulus;
    Ok(SpectralReport {
        leading_eigenvalue: num / den,
        subdominant_modulus: sub.modulus,
        gap,
        gap_found: gap > 1e-6,
        stationary: st,
        subdominant: sub,
    })
}
