//! Derived constants of the embedding and the admissibility conditions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ModelError, ModelSpec};
use crate::expr::{sampled_derivative_bounds, DerivativeBounds, SampleBox};

/// Volume of the unit ball of `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// `η₀(σ, Y) = 1/√σ + 4·Y·γ_{k−1} / (γ_k·(√σ − 1))`.
pub fn eta0(sigma: f64, y: u32, k: usize) -> Result<f64, ModelError> {
    if !(sigma > 1.0) {
        return Err(ModelError::Invalid(format!(
            "eta0 needs sigma > 1, got {sigma}"
        )));
    }
    let s = sigma.sqrt();
    let ratio = if k == 0 {
        0.0
    } else {
        unit_ball_volume(k - 1) / unit_ball_volume(k)
    };
    Ok(1.0 / s + 4.0 * y as f64 * ratio / (s - 1.0))
}

/// The `σ > 1` at which `η₀(σ, Y) = 1`.
pub fn crossing_threshold(y: u32, k: usize) -> f64 {
    let f = |sigma: f64| eta0(sigma, y, k).unwrap_or(f64::INFINITY) - 1.0;
    let mut hi = 4.0;
    while f(hi) > 0.0 {
        hi *= 4.0;
    }
    let mut lo = 1.0 + 1e-12;
    // bisection down to a relative width of 1e-15
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `j = ⌊(v + L)/(2L)⌋`, so that `v − 2jL ∈ [−L, L)`.
#[inline]
pub fn branch_index(v: f64, l: f64) -> i64 {
    let j = ((v + l) / (2.0 * l)).floor() as i64;
    // guard against rounding in the division near a boundary
    let r = v - 2.0 * j as f64 * l;
    if r >= l {
        j + 1
    } else if r < -l {
        j - 1
    } else {
        j
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMargin {
    pub name: String,
    /// The sampled quantity compared against `bound`.
    pub value: f64,
    pub bound: f64,
    /// Nonnegative when the condition holds.
    pub margin: f64,
    pub holds: bool,
}

impl ConditionMargin {
    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            margin: value - bound,
            holds: value >= bound,
        }
    }

    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            margin: bound - value,
            holds: value <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub gamma: f64,
    /// Half-widths `γ^{j−1} L` of `Ω`.
    pub omega: Vec<f64>,
    #[serde(rename = "Y")]
    pub y: u32,
    pub threshold: f64,
    pub eta0_value: f64,
    pub condition_margins: Vec<ConditionMargin>,
    #[serde(rename = "N_bound")]
    pub n_bound: u64,
    #[serde(rename = "M1_phi0")]
    pub m1_phi0: f64,
    #[serde(rename = "M_Gamma")]
    pub m_gamma: f64,
    /// Radius below which no ball meets two slanted boundaries.
    pub eps0: f64,
    pub separation_bound: f64,
    /// Range of `Φ₀` on `[−L, L]^k`, which fixes the branch window.
    pub phi_min: f64,
    pub phi_max: f64,
    /// Derivative bounds over the closed sampling of `(−L−β, L+β)^k`.
    pub bounds: DerivativeBounds,
    pub notes: Vec<String>,
    pub ok: bool,
}

/// Compute `γ`, `Ω`, the threshold and the sampled admissibility checks.
pub fn derive_geometry(spec: &ModelSpec, resolution: usize) -> Result<GeometryReport, ModelError> {
    spec.validate()?;
    let k = spec.k;
    let l = spec.l;
    let gamma = (spec.c1 * spec.sigma).powf(-0.5);
    let omega: Vec<f64> = (0..k).map(|j| gamma.powi(j as i32) * l).collect();
    let y = k as u32 + 2;
    let threshold = crossing_threshold(y, k);
    let eta0_value = eta0(spec.sigma, y, k)?;

    let res = vec![resolution; k];
    let bounds = sampled_derivative_bounds(&spec.phi0, &SampleBox::cube(l + spec.beta, k), &res)?;
    let on_omega = sampled_derivative_bounds(&spec.phi0, &SampleBox::cube(l, k), &res)?;

    let mut margins = vec![ConditionMargin::at_least(
        "cond2_first_partial",
        bounds.partial_sq_min[0],
        spec.c1.powi(k as i32 - 1) * spec.c2 * spec.sigma.powi(k as i32),
    )];
    if k >= 2 {
        let worst = bounds.partial_sq_max[1..]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        margins.push(ConditionMargin::at_most(
            "cond3_transverse_partials",
            worst,
            (spec.c1 - 1.0) * (spec.c2 - 1.0) * spec.sigma / (k - 1) as f64,
        ));
    }
    margins.push(ConditionMargin {
        name: "sigma_threshold".into(),
        value: spec.sigma,
        bound: threshold,
        margin: spec.sigma - threshold,
        holds: spec.sigma > threshold,
    });
    let ok = margins.iter().all(|m| m.holds);

    let n_bound =
        ((on_omega.phi_max - on_omega.phi_min + 2.0 * l) / (2.0 * l) + 1.0).floor() as u64;
    let m1_phi0 = bounds.gradient_norm_max;
    let m_gamma = gamma.powi(-(k as i32 - 1));
    let separation_bound = 2.0 * l / (m1_phi0 * m_gamma);
    let eps0 = l / (2.0 * m1_phi0 * m_gamma) * (1.0 - 1e-6);

    let notes = vec![
        "suprema and infima are sampled on a closed grid and are not rigorous enclosures".into(),
        "the additional smallness constraint on eps0 coming from the Jacobian Hoelder estimate is not computed".into(),
    ];

    Ok(GeometryReport {
        gamma,
        omega,
        y,
        threshold,
        eta0_value,
        condition_margins: margins,
        n_bound,
        m1_phi0,
        m_gamma,
        eps0,
        separation_bound,
        phi_min: on_omega.phi_min,
        phi_max: on_omega.phi_max,
        bounds,
        notes,
        ok,
    })
}
