//! Direct simulation of the perturbed recurrence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::model::Model;

/// Largest tolerated gap between the embedded update and `T_θ`.
pub const EMBEDDING_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub k: usize,
    /// `θ_0, θ_1, …`; one per step.
    pub thetas: Vec<f64>,
    /// `X_0, …, X_{k−1}` followed by one value per step.
    pub x: Vec<f64>,
    /// Largest `‖Y_{n+1} − T_{θ_n}(Y_n)‖` seen.
    pub max_embedding_error: f64,
    /// Steps where rounding put `Φ₀ + θ` on a branch boundary.
    pub boundary_hits: usize,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.thetas.len()
    }

    /// `Y_n = (X_n, γX_{n+1}, …, γ^{k−1}X_{n+k−1})`, counting from the first
    /// full window.
    pub fn embedded(&self, n: usize, model: &Model) -> Vec<f64> {
        (0..self.k)
            .map(|j| model.gamma_pow(j) * self.x[n + j])
            .collect()
    }
}

fn window(x: &[f64], k: usize) -> &[f64] {
    &x[x.len() - k..]
}

/// Run `n_steps` of `X_{n+1} = φ_θ(X_{n−k+1}, …, X_n)` with `θ` drawn from
/// the model's law on stream `stream` of the generator keyed by `seed`.
pub fn simulate_stream(
    model: &Model,
    x0: &[f64],
    n_steps: usize,
    seed: u64,
    stream: u64,
) -> Result<Trajectory, StatsError> {
    let k = model.k();
    let l = model.l();
    if x0.len() != k {
        return Err(StatsError::Invalid(format!(
            "expected {k} initial values, got {}",
            x0.len()
        )));
    }
    if let Some(v) = x0.iter().find(|v| !(v.abs() <= l)) {
        return Err(StatsError::Invalid(format!(
            "initial value {v} outside [-L, L]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut x = Vec::with_capacity(k + n_steps);
    x.extend_from_slice(x0);
    let mut thetas = Vec::with_capacity(n_steps);
    let mut y = vec![0.0; k];
    let mut ty = vec![0.0; k];
    let mut max_err: f64 = 0.0;
    let mut hits = 0;
    for _ in 0..n_steps {
        let theta = model.law.sample(&mut rng);
        let w = window(&x, k);
        let (next, step) = model.phi_theta(w, theta)?;
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = model.gamma_pow(j) * w[j];
        }
        let tstep = model.apply_t_into(&y, theta, &mut ty)?;
        x.push(next);
        thetas.push(theta);
        if step.boundary_hit || tstep.boundary_hit {
            hits += 1;
            continue;
        }
        let w = window(&x, k);
        let err = (0..k)
            .map(|j| (model.gamma_pow(j) * w[j] - ty[j]).powi(2))
            .sum::<f64>()
            .sqrt();
        if err > EMBEDDING_TOLERANCE {
            return Err(StatsError::Invalid(format!(
                "embedded update departs from T_theta by {err:e} at step {}",
                thetas.len()
            )));
        }
        max_err = max_err.max(err);
    }
    Ok(Trajectory {
        seed,
        stream,
        k,
        thetas,
        x,
        max_embedding_error: max_err,
        boundary_hits: hits,
    })
}

pub fn simulate_process(
    model: &Model,
    x0: &[f64],
    n_steps: usize,
    seed: u64,
) -> Result<Trajectory, StatsError> {
    simulate_stream(model, x0, n_steps, seed, 0)
}
