//! Problem definition, the embedding into `Ω`, the maps `T_θ` and `S`, and
//! the geometric diagnostics they are checked against.

mod boundary;
mod expansion;
mod geometry;
mod maps;
pub mod perturbation;
mod spec;

use thiserror::Error;

use crate::expr::ExprError;
use crate::numeric::RootError;

pub use boundary::{boundary_separation, boundary_traces, BoundarySeparation, BoundaryTrace};
pub use expansion::{expansion_eigenvalues, ExpansionDiagnostics};
pub use geometry::{
    branch_index, crossing_threshold, derive_geometry, eta0, unit_ball_volume, ConditionMargin,
    GeometryReport,
};
pub use maps::{apply_s, apply_t, TStep};
pub use perturbation::{PerturbationLaw, PerturbationSpec};
pub use spec::ModelSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("point outside the domain: {0}")]
    OutsideDomain(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Default per-axis sampling resolution for derivative bounds.
pub const DEFAULT_RESOLUTION: usize = 64;

/// A validated spec together with its geometry and instantiated law; the
/// handle every downstream computation works from.
#[derive(Debug)]
pub struct Model {
    pub spec: ModelSpec,
    pub geometry: GeometryReport,
    pub law: Box<dyn PerturbationLaw>,
    /// `γ^i` for `i = 0..=k`.
    gpow: Vec<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec, resolution: usize) -> Result<Self, ModelError> {
        let geometry = derive_geometry(&spec, resolution)?;
        Self::with_geometry(spec, geometry)
    }

    pub fn with_geometry(spec: ModelSpec, geometry: GeometryReport) -> Result<Self, ModelError> {
        let law = spec.perturbation.build()?;
        let gpow = (0..=spec.k)
            .map(|i| geometry.gamma.powi(i as i32))
            .collect();
        Ok(Self {
            spec,
            geometry,
            law,
            gpow,
        })
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    pub fn l(&self) -> f64 {
        self.spec.l
    }

    pub fn gamma(&self) -> f64 {
        self.geometry.gamma
    }

    /// `γ^i`.
    #[inline]
    pub fn gamma_pow(&self, i: usize) -> f64 {
        self.gpow[i]
    }

    /// Half-width of `Ω` along axis `i` (zero-based).
    #[inline]
    pub fn half_width(&self, i: usize) -> f64 {
        self.gpow[i] * self.spec.l
    }

    /// `Γ(u)`: maps `Ω` onto `[−L, L]^k`.
    #[inline]
    pub fn dilate(&self, u: &[f64], x: &mut [f64]) {
        for (i, (xi, ui)) in x.iter_mut().zip(u).enumerate() {
            *xi = ui / self.gpow[i];
        }
    }

    /// `Γ^{-1}(x)`.
    #[inline]
    pub fn contract(&self, x: &[f64], u: &mut [f64]) {
        for (i, (ui, xi)) in u.iter_mut().zip(x).enumerate() {
            *ui = xi * self.gpow[i];
        }
    }

    /// Lebesgue measure of `Ω`.
    pub fn omega_volume(&self) -> f64 {
        (0..self.k()).map(|i| 2.0 * self.half_width(i)).product()
    }

    /// Whether `u ∈ Ω_r`, with a relative slack of `1e-12` on `Ω` itself.
    pub fn contains(&self, u: &[f64], r: f64) -> bool {
        u.iter()
            .enumerate()
            .all(|(i, &ui)| ui.abs() <= self.gpow[i] * (self.spec.l + r) * (1.0 + 1e-12))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::expr::parse_expression;

    pub fn spec(phi0: &str, k: usize, sigma: f64, law: PerturbationSpec) -> ModelSpec {
        ModelSpec::new(
            k,
            1.0,
            0.5,
            parse_expression(phi0, k).unwrap(),
            law,
            1.1,
            1.1,
            sigma,
        )
        .unwrap()
    }

    pub fn reference() -> Model {
        Model::new(
            spec(
                "200*x1 + sin(x2)",
                2,
                150.0,
                PerturbationSpec::gaussian(0.0, 0.5),
            ),
            64,
        )
        .unwrap()
    }

    pub fn linear() -> Model {
        Model::new(
            spec("200*x1", 2, 150.0, PerturbationSpec::gaussian(0.0, 0.5)),
            64,
        )
        .unwrap()
    }

    /// `x ↦ 2x` on `[−1, 1]` with no noise.
    pub fn doubling() -> Model {
        let spec = ModelSpec::new(
            1,
            1.0,
            0.5,
            parse_expression("2*x1", 1).unwrap(),
            PerturbationSpec::fixed(0.0),
            1.1,
            1.1,
            3.0,
        )
        .unwrap();
        Model::new(spec, 64).unwrap()
    }
}
