//! Constants of the Lasota–Yorke inequality `|P_θ f|₁ ≤ η|f|₁ + D‖f‖₁`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TransferError;
use crate::expr::{sampled_derivative_bounds, sampled_derivative_bounds_scaled, SampleBox};
use crate::model::{expansion_eigenvalues, Model, ModelError};

/// Target for `η` when `ε₀` has to be reduced.
const ETA_TARGET: f64 = 1.0 - 1e-3;
const EPS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LYConstants {
    pub eps0: f64,
    pub eps0_requested: f64,
    /// Whether `ε₀` was reduced to bring `η` below one.
    pub adjusted: bool,
    #[serde(rename = "K")]
    pub k_const: f64,
    #[serde(rename = "M")]
    pub m_const: f64,
    #[serde(rename = "etaBar")]
    pub eta_bar: f64,
    pub eta: f64,
    #[serde(rename = "D")]
    pub d_const: f64,
    /// `η̄(0) = η₀(σ, Y)`.
    pub eta_bar_limit: f64,
    pub sup_d1: f64,
    pub inf_d1: f64,
    pub sup_grad_d1: f64,
    /// `sup‖DS^{−1}‖ = 1/√(min λ₋)`.
    pub sup_ds_inv: f64,
    pub notes: Vec<String>,
}

impl LYConstants {
    pub fn contracting(&self) -> bool {
        self.eta < 1.0 && self.d_const > 0.0
    }
}

/// `η̄(ε₀)` for a given `M`.
pub fn eta_bar(model: &Model, m: f64, eps0: f64) -> f64 {
    let s = model.spec.sigma.sqrt();
    let k = model.k() as i32;
    let head = 1.0 / s;
    let crossing = model.geometry.eta0_value - head;
    head + crossing
        * (1.0 + m * eps0 * (1.0 + 1.0 / s))
        * (1.0 + m * (1.0 - 1.0 / s) * eps0).powi(k - 1)
}

struct Sampled {
    k_const: f64,
    m_const: f64,
    sup_d1: f64,
    inf_d1: f64,
    sup_grad_d1: f64,
    sup_ds_inv: f64,
}

fn sample(model: &Model) -> Result<Sampled, TransferError> {
    let spec = &model.spec;
    let k = model.k();
    let res = model.geometry.bounds.resolution.clone();
    let r = spec.l + 2.0 * spec.beta / 3.0;
    let cube = SampleBox::cube(r, k);
    let b = sampled_derivative_bounds(&spec.phi0, &cube, &res)?;
    let scale: Vec<f64> = (0..k).map(|i| model.gamma_pow(i).recip()).collect();
    let scaled = sampled_derivative_bounds_scaled(&spec.phi0, &cube, &res, &scale)?;

    let total: usize = res.iter().product();
    let min_lam = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rest = flat;
            let x: Vec<f64> = res
                .iter()
                .map(|&n| {
                    let i = rest % n;
                    rest /= n;
                    -r + 2.0 * r * i as f64 / (n - 1) as f64
                })
                .collect();
            expansion_eigenvalues(&x, model).map(|d| d.lam_minus)
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))?;
    if !(min_lam > 0.0) {
        return Err(ModelError::Invalid(
            "expansion eigenvalue vanishes on the sampled grid".into(),
        )
        .into());
    }
    let sup_ds_inv = 1.0 / min_lam.sqrt();

    let sup_d1 = b.first_partial_abs_max;
    let inf_d1 = b.first_partial_abs_min;
    let sup_grad_d1 = b.grad_first_partial_norm_max;
    let kk = k as i32;
    let k_const = 2.0
        * sup_d1
        * spec.c1.powi(1 - kk)
        * spec.c2.recip()
        * spec.sigma.powi(-kk)
        * sup_grad_d1
        * model.gamma().powi(1 - kk)
        * sup_ds_inv;
    let m_const = scaled
        .gradient_norm_max
        .max(scaled.hessian_norm_max)
        .max(inf_d1.recip());
    Ok(Sampled {
        k_const,
        m_const,
        sup_d1,
        inf_d1,
        sup_grad_d1,
        sup_ds_inv,
    })
}

/// `K`, `M`, `η̄`, `η` and `D` at `ε₀`, shrinking `ε₀` by bisection when
/// `η ≥ 1` until `η ≤ 1 − 10⁻³`.
pub fn lasota_yorke_constants(model: &Model, eps0: f64) -> Result<LYConstants, TransferError> {
    if !(eps0 > 0.0) {
        return Err(TransferError::Invalid(format!(
            "eps0 must be positive, got {eps0}"
        )));
    }
    let s = sample(model)?;
    let root_sigma = model.spec.sigma.sqrt();
    let eta_at = |e: f64| (1.0 + s.k_const * e / root_sigma) * eta_bar(model, s.m_const, e);

    let mut chosen = eps0;
    let adjusted = eta_at(eps0) >= 1.0;
    if adjusted {
        if eta_at(EPS_FLOOR) > ETA_TARGET {
            return Err(TransferError::NoContraction(format!(
                "eta at eps0 = {EPS_FLOOR:e} is {}; sigma is too close to the threshold",
                eta_at(EPS_FLOOR)
            )));
        }
        let (mut lo, mut hi) = (EPS_FLOOR, eps0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eta_at(mid) <= ETA_TARGET {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        chosen = lo;
    }

    let eb = eta_bar(model, s.m_const, chosen);
    let kf = s.k_const * chosen / root_sigma;
    let notes = vec![
        "K and M come from suprema sampled on [-L-2beta/3, L+2beta/3]^k and are lower estimates of the true suprema"
            .into(),
    ];
    Ok(LYConstants {
        eps0: chosen,
        eps0_requested: eps0,
        adjusted,
        k_const: s.k_const,
        m_const: s.m_const,
        eta_bar: eb,
        eta: (1.0 + kf) * eb,
        d_const: kf + (1.0 + kf) * eb,
        eta_bar_limit: eta_bar(model, s.m_const, 0.0),
        sup_d1: s.sup_d1,
        inf_d1: s.inf_d1,
        sup_grad_d1: s.sup_grad_d1,
        sup_ds_inv: s.sup_ds_inv,
        notes,
    })
}
