//! Spectrum of `B = DSᵀ DS`, which controls how strongly `S` expands.

use serde::{Deserialize, Serialize};

use super::{Model, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionDiagnostics {
    pub v1: f64,
    pub vnorm2: f64,
    pub lam_minus: f64,
    pub lam_plus: f64,
    pub gamma_inv_sq: f64,
    /// `λ₋ − σ`.
    pub margin: f64,
}

impl ExpansionDiagnostics {
    /// The two simple eigenvalues of `diag(0, g·I) + (v₁, V)(v₁, V)ᵀ`.
    pub fn from_parts(v1: f64, vnorm2: f64, gamma_inv_sq: f64, sigma: f64) -> Self {
        let s = gamma_inv_sq + v1 * v1 + vnorm2;
        let disc = (s * s - 4.0 * v1 * v1 * gamma_inv_sq).max(0.0);
        let lam_plus = 0.5 * (s + disc.sqrt());
        // the product of the roots avoids cancellation in the smaller one
        let lam_minus = if lam_plus > 0.0 {
            v1 * v1 * gamma_inv_sq / lam_plus
        } else {
            0.0
        };
        Self {
            v1,
            vnorm2,
            lam_minus,
            lam_plus,
            gamma_inv_sq,
            margin: lam_minus - sigma,
        }
    }
}

/// Expansion eigenvalues at the `Γ`-image point `x ∈ (−L−β, L+β)^k`.
///
/// For `k = 1` there is no transverse block and both eigenvalues equal
/// `(Φ₀′)²`.
pub fn expansion_eigenvalues(x: &[f64], model: &Model) -> Result<ExpansionDiagnostics, ModelError> {
    let k = model.k();
    let (_, grad) = model.spec.phi0.eval_with_gradient(x)?;
    let gamma_inv_sq = model.gamma().powi(-2);
    let sigma = model.spec.sigma;
    if k == 1 {
        let l = grad[0] * grad[0];
        return Ok(ExpansionDiagnostics {
            v1: grad[0],
            vnorm2: 0.0,
            lam_minus: l,
            lam_plus: l,
            gamma_inv_sq,
            margin: l - sigma,
        });
    }
    let v1 = model.gamma_pow(k - 1) * grad[0];
    let vnorm2: f64 = (1..k)
        .map(|i| (model.gamma_pow(k - 1 - i) * grad[i]).powi(2))
        .sum();
    Ok(ExpansionDiagnostics::from_parts(
        v1,
        vnorm2,
        gamma_inv_sq,
        sigma,
    ))
}
