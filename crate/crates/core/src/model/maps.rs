//! The maps `T_θ` and `S` on the embedded state space.

use super::{branch_index, Model, ModelError};

const BOUNDARY_TOL: f64 = 1e-14;

/// Side information from one application of `T_θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TStep {
    pub branch: i64,
    /// `Φ₀(Γu) + θ` was within rounding of an odd multiple of `L`.
    pub boundary_hit: bool,
}

impl Model {
    /// `φ_θ(x) = Φ₀(x) + θ` reduced into `[−L, L)`, with its branch index.
    #[inline]
    pub fn phi_theta(&self, x: &[f64], theta: f64) -> Result<(f64, TStep), ModelError> {
        let l = self.spec.l;
        let v = self.spec.phi0.eval(x)? + theta;
        let j = branch_index(v, l);
        let r = v - 2.0 * j as f64 * l;
        let boundary_hit = (r + l).abs() <= BOUNDARY_TOL * v.abs().max(1.0);
        Ok((
            r,
            TStep {
                branch: j,
                boundary_hit,
            },
        ))
    }

    /// `T_θ(u)` written into `out`.
    pub fn apply_t_into(
        &self,
        u: &[f64],
        theta: f64,
        out: &mut [f64],
    ) -> Result<TStep, ModelError> {
        let k = self.k();
        if u.len() != k || out.len() != k {
            return Err(ModelError::OutsideDomain(format!(
                "expected {k} coordinates"
            )));
        }
        if !self.contains(u, 0.0) {
            return Err(ModelError::OutsideDomain(format!("{u:?} not in Omega")));
        }
        let mut x = [0.0; 16];
        let x = if k <= 16 {
            &mut x[..k]
        } else {
            return self.apply_t_heap(u, theta, out);
        };
        self.dilate(u, x);
        let (r, step) = self.phi_theta(x, theta)?;
        let g = self.gamma();
        for i in 0..k - 1 {
            out[i] = u[i + 1] / g;
        }
        out[k - 1] = self.gamma_pow(k - 1) * r;
        Ok(step)
    }

    fn apply_t_heap(&self, u: &[f64], theta: f64, out: &mut [f64]) -> Result<TStep, ModelError> {
        let k = self.k();
        let mut x = vec![0.0; k];
        self.dilate(u, &mut x);
        let (r, step) = self.phi_theta(&x, theta)?;
        let g = self.gamma();
        for i in 0..k - 1 {
            out[i] = u[i + 1] / g;
        }
        out[k - 1] = self.gamma_pow(k - 1) * r;
        Ok(step)
    }

    /// `S(u)`: like `T_θ` with `θ = 0` and no reduction, defined on `Ω_β`.
    pub fn apply_s_into(&self, u: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        let k = self.k();
        if !self.contains(u, self.spec.beta) {
            return Err(ModelError::OutsideDomain(format!(
                "{u:?} not in Omega_beta"
            )));
        }
        let mut x = vec![0.0; k];
        self.dilate(u, &mut x);
        let v = self.spec.phi0.eval(&x)?;
        let g = self.gamma();
        for i in 0..k - 1 {
            out[i] = u[i + 1] / g;
        }
        out[k - 1] = self.gamma_pow(k - 1) * v;
        Ok(())
    }
}

/// `T_θ(u)` for `u ∈ Ω`.
pub fn apply_t(u: &[f64], theta: f64, model: &Model) -> Result<(Vec<f64>, TStep), ModelError> {
    let mut out = vec![0.0; model.k()];
    let step = model.apply_t_into(u, theta, &mut out)?;
    Ok((out, step))
}

/// `S(u)` for `u ∈ Ω_β`.
pub fn apply_s(u: &[f64], model: &Model) -> Result<Vec<f64>, ModelError> {
    let mut out = vec![0.0; model.k()];
    model.apply_s_into(u, &mut out)?;
    Ok(out)
}
