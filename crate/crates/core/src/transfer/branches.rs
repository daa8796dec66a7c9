//! Inverse branches of `T_θ`.
//!
//! For `y ∈ Ω` every preimage has `u_i = γ·y_{i−1}` for `i ≥ 2`, so in the
//! dilated coordinates `x = Γu` only `x₁` is unknown and solves
//! `Φ₀(x₁, x₂, …, x_k) = γ^{−(k−1)}·y_k − θ + 2jL` with
//! `x_i = y_{i−1}·γ^{−(i−2)}`. Since `∂₁Φ₀` never vanishes this has at most
//! one root per `j`.

use serde::{Deserialize, Serialize};

use super::TransferError;
use crate::expr::Expr;
use crate::model::Model;
use crate::numeric::newton_bracketed;

const ROOT_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub j: i64,
    pub preimage: Vec<f64>,
    /// `|∂₁Φ₀(Γu)|^{−1}`.
    pub weight: f64,
}

/// `Φ₀` restricted to the line of preimages of a fixed `y`, reusable for
/// every `θ` and `j`.
#[derive(Debug)]
pub struct FiberSolver<'m> {
    model: &'m Model,
    line: Expr,
    /// `x₂, …, x_k`; `x₁` is the free variable.
    rest: Vec<f64>,
    /// `γ^{−(k−1)}·y_k`.
    target: f64,
    /// `Φ₀` at `x₁ = −L` and `x₁ = L`.
    ends: (f64, f64),
    increasing: bool,
}

impl<'m> FiberSolver<'m> {
    pub fn new(model: &'m Model, y: &[f64]) -> Result<Self, TransferError> {
        let k = model.k();
        if y.len() != k || !model.contains(y, 0.0) {
            return Err(TransferError::OutsideDomain(format!("{y:?} not in Omega")));
        }
        let rest: Vec<f64> = (1..k).map(|i| y[i - 1] / model.gamma_pow(i - 1)).collect();
        Self::from_rest(model, rest, y[k - 1] / model.gamma_pow(k - 1))
    }

    /// Build from the dilated transverse coordinates directly.
    pub fn from_rest(model: &'m Model, rest: Vec<f64>, target: f64) -> Result<Self, TransferError> {
        let mut fixed = vec![None];
        fixed.extend(rest.iter().map(|&v| Some(v)));
        let line = model.spec.phi0.bind(&fixed);
        let l = model.l();
        let mut s = Self {
            model,
            line,
            rest,
            target,
            ends: (0.0, 0.0),
            increasing: true,
        };
        let lo = s.phi(-l)?;
        let hi = s.phi(l)?;
        s.ends = (lo, hi);
        s.increasing = hi >= lo;
        Ok(s)
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    /// Move to another point of the same fiber by changing `y_k`.
    pub fn retarget(&mut self, y_last: f64) {
        self.target = y_last / self.model.gamma_pow(self.model.k() - 1);
    }

    #[inline]
    fn point(&self, x1: f64) -> smallvec::SmallVec<[f64; 8]> {
        let mut x = smallvec::SmallVec::new();
        x.push(x1);
        x.extend_from_slice(&self.rest);
        x
    }

    /// `Φ₀(x₁, rest)`.
    #[inline]
    pub fn phi(&self, x1: f64) -> Result<f64, TransferError> {
        Ok(self.line.eval(&self.point(x1))?)
    }

    /// `Φ₀` and `∂₁Φ₀` at `(x₁, rest)`.
    #[inline]
    pub fn phi_d1(&self, x1: f64) -> Result<(f64, f64), TransferError> {
        Ok(self.line.eval_partial(&self.point(x1), 0)?)
    }

    /// Range of `Φ₀` over `x₁ ∈ [−L, L]` on this fiber.
    pub fn range(&self) -> (f64, f64) {
        (self.ends.0.min(self.ends.1), self.ends.0.max(self.ends.1))
    }

    pub fn increasing(&self) -> bool {
        self.increasing
    }

    /// `j` values whose level `target − θ + 2jL` is attained on this fiber,
    /// intersected with the model's global window.
    pub fn window(&self, theta: f64) -> (i64, i64) {
        let l = self.model.l();
        let g = &self.model.geometry;
        let c = self.target - theta;
        let (lo, hi) = self.range();
        let fiber = (
            ((lo - c) / (2.0 * l)).ceil() as i64,
            ((hi - c) / (2.0 * l)).floor() as i64,
        );
        let global = (
            ((theta + g.phi_min - l) / (2.0 * l)).ceil() as i64 - 1,
            ((theta + g.phi_max + l) / (2.0 * l)).floor() as i64 + 1,
        );
        (fiber.0.max(global.0), fiber.1.min(global.1))
    }

    /// Solve `Φ₀(x₁, rest) = level` for `x₁ ∈ [a, b]`.
    pub fn solve_level(
        &self,
        level: f64,
        a: f64,
        b: f64,
        guess: Option<f64>,
    ) -> Result<f64, TransferError> {
        let mut failure = None;
        let root = newton_bracketed(
            |t| match self.phi_d1(t) {
                Ok((v, d)) => (v - level, d),
                Err(e) => {
                    failure = Some(e);
                    (f64::NAN, 1.0)
                }
            },
            a,
            b,
            guess,
            ROOT_TOL,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(root?)
    }

    /// Preimage first coordinate and Jacobian weight of branch `j`, if the
    /// branch is nonempty at this `y`.
    pub fn invert(
        &self,
        j: i64,
        theta: f64,
        guess: Option<f64>,
    ) -> Result<Option<(f64, f64)>, TransferError> {
        let l = self.model.l();
        let level = self.target - theta + 2.0 * j as f64 * l;
        let (lo, hi) = self.range();
        if level < lo || level > hi {
            return Ok(None);
        }
        let x1 = self.solve_level(level, -l, l, guess)?;
        let (_, d) = self.phi_d1(x1)?;
        if d == 0.0 {
            return Err(TransferError::Degenerate(format!(
                "d1 Phi0 vanishes at x1 = {x1}"
            )));
        }
        Ok(Some((x1, 1.0 / d.abs())))
    }

    /// Call `visit(j, x₁, weight)` for every nonempty branch at `θ`.
    pub fn for_each_branch(
        &self,
        theta: f64,
        mut visit: impl FnMut(i64, f64, f64),
    ) -> Result<(), TransferError> {
        let (j0, j1) = self.window(theta);
        let l = self.model.l();
        let sign = if self.increasing { 1.0 } else { -1.0 };
        // the next level is 2L higher, so step along x₁ by 2L / Φ₀′
        let mut guess: Option<f64> = None;
        for j in j0..=j1 {
            if let Some((x1, w)) = self.invert(j, theta, guess)? {
                visit(j, x1, w);
                guess = Some(x1 + sign * 2.0 * l * w);
            }
        }
        Ok(())
    }

    /// Full preimage `u` from its first dilated coordinate.
    pub fn preimage(&self, x1: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.rest.len() + 1];
        self.preimage_into(x1, &mut u);
        u
    }

    #[inline]
    pub fn preimage_into(&self, x1: f64, u: &mut [f64]) {
        u[0] = x1;
        for (i, &xi) in self.rest.iter().enumerate() {
            u[i + 1] = xi * self.model.gamma_pow(i + 1);
        }
    }
}

/// Branch `j` of `T_θ^{−1}` at `y`, or `None` if `U_j^θ` misses the fiber.
pub fn inverse_branch(
    y: &[f64],
    j: i64,
    theta: f64,
    model: &Model,
) -> Result<Option<Branch>, TransferError> {
    let fiber = FiberSolver::new(model, y)?;
    Ok(fiber.invert(j, theta, None)?.map(|(x1, w)| Branch {
        j,
        preimage: fiber.preimage(x1),
        weight: w,
    }))
}

/// All nonempty branches at `(y, θ)`, in increasing `j`.
pub fn enumerate_branches(
    y: &[f64],
    theta: f64,
    model: &Model,
) -> Result<Vec<Branch>, TransferError> {
    let fiber = FiberSolver::new(model, y)?;
    let mut out = Vec::new();
    fiber.for_each_branch(theta, |j, x1, w| {
        out.push(Branch {
            j,
            preimage: fiber.preimage(x1),
            weight: w,
        })
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expression;
    use crate::model::fixtures::{linear, reference};
    use crate::model::{apply_t, ModelSpec, PerturbationSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_closed_form_preimage() {
        let m = linear();
        let g = m.gamma();
        let y = [0.5, 0.01];
        let b = inverse_branch(&y, 5, 0.3, &m).unwrap().unwrap();
        let u1 = (y[1] / g - 0.3 + 10.0) / 200.0;
        assert!((b.preimage[0] - u1).abs() < 1e-15);
        assert!((b.preimage[0] - 0.0491423).abs() < 1e-7);
        assert!((b.preimage[1] - g * 0.5).abs() < 1e-15);
        assert!((b.preimage[1] - 0.0389249).abs() < 1e-7);
        assert_eq!(b.weight, 1.0 / 200.0);
        assert!(inverse_branch(&y, 1_000_000, 0.3, &m).unwrap().is_none());
    }

    #[test]
    fn linear_model_has_two_hundred_branches() {
        let m = linear();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let y = [
                rng.random_range(-0.99..0.99),
                rng.random_range(-0.99..0.99) * m.gamma(),
            ];
            let bs = enumerate_branches(&y, 0.0, &m).unwrap();
            assert_eq!(bs.len(), 200);
            let total: f64 = bs.iter().map(|b| b.weight).sum();
            assert!((total - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn small_range_has_one_branch() {
        let spec = ModelSpec::new(
            2,
            1.0,
            0.5,
            parse_expression("0.25*x1 + 0.2*sin(x2)", 2).unwrap(),
            PerturbationSpec::fixed(0.0),
            1.1,
            1.1,
            150.0,
        )
        .unwrap();
        let m = Model::new(spec, 16).unwrap();
        let y = [0.1, 0.05 * m.gamma()];
        let bs = enumerate_branches(&y, 0.0, &m).unwrap();
        assert_eq!(bs.len(), 1);
        assert_eq!(bs[0].j, 0);
    }

    #[test]
    fn round_trip_and_branch_bound() {
        let m = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let y = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0) * m.gamma(),
            ];
            let theta = m.law.sample(&mut rng);
            let bs = enumerate_branches(&y, theta, &m).unwrap();
            assert!(bs.len() as u64 <= m.geometry.n_bound);
            for b in &bs {
                let (ty, step) = apply_t(&b.preimage, theta, &m).unwrap();
                let err = ty
                    .iter()
                    .zip(&y)
                    .map(|(p, q)| (p - q).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(err <= 1e-10, "{err}");
                assert!(step.branch == b.j || step.boundary_hit);
            }
        }
    }

    #[test]
    fn decreasing_phi_is_supported() {
        let spec = ModelSpec::new(
            2,
            1.0,
            0.5,
            parse_expression("-180*x1 + 0.5*cos(x2)", 2).unwrap(),
            PerturbationSpec::uniform(-0.2, 0.2),
            1.1,
            1.1,
            150.0,
        )
        .unwrap();
        let m = Model::new(spec, 16).unwrap();
        let y = [0.2, -0.5 * m.gamma()];
        let bs = enumerate_branches(&y, 0.1, &m).unwrap();
        assert!(bs.len() >= 179);
        for b in &bs {
            let (ty, _) = apply_t(&b.preimage, 0.1, &m).unwrap();
            assert!((ty[1] - y[1]).abs() < 1e-12 && (ty[0] - y[0]).abs() < 1e-12);
        }
    }
}
