//! `P_θ f(y) = Σ_j f(u_j) / |∂₁Φ₀(Γu_j)|` and its `θ`-average.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FiberSolver, Observable, TransferError};
use crate::model::{branch_index, Model};
use crate::numeric::CompositeRule;
use crate::ulam::DensityGrid;

/// `N_bound·C₁^{−(k−1)/2}·C₂^{−1/2}·σ^{−k/2}`, the `L∞ → L∞` norm bound of
/// `P` up to the factor `sup|f|`.
pub fn linf_factor(model: &Model) -> f64 {
    let s = &model.spec;
    let k = s.k as f64;
    model.geometry.n_bound as f64
        * s.c1.powf(-(k - 1.0) / 2.0)
        * s.c2.powf(-0.5)
        * s.sigma.powf(-k / 2.0)
}

fn sum_branches<F: Observable + ?Sized>(
    fiber: &FiberSolver<'_>,
    f: &F,
    theta: f64,
    u: &mut [f64],
) -> Result<f64, TransferError> {
    let mut acc = 0.0;
    fiber.for_each_branch(theta, |_, x1, w| {
        fiber.preimage_into(x1, u);
        acc += f.at(u) * w;
    })?;
    Ok(acc)
}

/// `P_θ f(y)`.
pub fn apply_transfer_theta<F: Observable + ?Sized>(
    f: &F,
    y: &[f64],
    theta: f64,
    model: &Model,
) -> Result<f64, TransferError> {
    let fiber = FiberSolver::new(model, y)?;
    let mut u = vec![0.0; model.k()];
    sum_branches(&fiber, f, theta, &mut u)
}

/// `Pf(y)` with a fresh `θ`-quadrature of the given order.
pub fn apply_transfer_averaged<F: Observable + ?Sized>(
    f: &F,
    y: &[f64],
    model: &Model,
    quad_order: usize,
) -> Result<f64, TransferError> {
    AveragedOperator::new(model, quad_order)?.apply(f, y)
}

/// The averaged operator with its `θ`-rule fixed, for repeated evaluation.
#[derive(Debug)]
pub struct AveragedOperator<'m> {
    model: &'m Model,
    rule: CompositeRule,
}

impl<'m> AveragedOperator<'m> {
    pub fn new(model: &'m Model, quad_order: usize) -> Result<Self, TransferError> {
        if quad_order < 2 {
            return Err(TransferError::Invalid(format!(
                "quadrature order {quad_order} below 2"
            )));
        }
        Ok(Self {
            model,
            rule: model.law.quadrature(quad_order),
        })
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    pub fn rule(&self) -> &CompositeRule {
        &self.rule
    }

    pub fn apply<F: Observable + ?Sized>(&self, f: &F, y: &[f64]) -> Result<f64, TransferError> {
        let fiber = FiberSolver::new(self.model, y)?;
        self.apply_on(&fiber, f)
    }

    /// `Pf` at the point the solver currently targets. The bound fiber is
    /// shared by every `θ` node.
    pub fn apply_on<F: Observable + ?Sized>(
        &self,
        fiber: &FiberSolver<'_>,
        f: &F,
    ) -> Result<f64, TransferError> {
        let mut u = vec![0.0; self.model.k()];
        let mut total = 0.0;
        for (&theta, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            total += w * sum_branches(fiber, f, theta, &mut u)?;
        }
        Ok(total)
    }

    /// `P f_m(y)` for several observables at once, sharing the branch
    /// solves.
    pub fn apply_all(&self, fs: &[&dyn Observable], y: &[f64]) -> Result<Vec<f64>, TransferError> {
        let fiber = FiberSolver::new(self.model, y)?;
        let mut u = vec![0.0; self.model.k()];
        let mut total = vec![0.0; fs.len()];
        for (&theta, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            fiber.for_each_branch(theta, |_, x1, jac| {
                fiber.preimage_into(x1, &mut u);
                for (t, f) in total.iter_mut().zip(fs) {
                    *t += w * jac * f.at(&u);
                }
            })?;
        }
        Ok(total)
    }

    /// `Pf` at many points, in parallel and in input order.
    pub fn apply_many<F: Observable + ?Sized>(
        &self,
        f: &F,
        ys: &[Vec<f64>],
    ) -> Result<Vec<f64>, TransferError> {
        ys.par_iter().map(|y| self.apply(f, y)).collect()
    }
}

/// Integrals of `Pf` for a grid function `f`, with the pointwise extremes
/// seen at the quadrature nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    /// `∫ Pf dm`.
    pub integral: f64,
    /// `∫ |Pf| dm`.
    pub l1: f64,
    pub min: f64,
    pub sup_abs: f64,
    /// `∫ f dm`, `‖f‖₁` and `sup|f|` on the grid.
    pub input_integral: f64,
    pub input_l1: f64,
    pub input_sup: f64,
    pub linf_bound: f64,
    pub evaluations: usize,
}

/// Integrate `Pf` over `Ω` for a piecewise-constant `f`.
///
/// The transverse coordinates `y₁ … y_{k−1}` are integrated with two
/// Gauss–Legendre nodes per grid cell, which the preimage formula aligns
/// with the cells of `f`. Along `y_k` the integrand jumps only at images of
/// the cell edges of `f` along `u₁`, so each node of the transverse rule
/// splits `y_k` at those images (for every `θ` node) and integrates the
/// smooth pieces with `nodes_per_piece` Gauss–Legendre points.
pub fn integrate_transfer(
    f: &DensityGrid,
    model: &Model,
    quad_order: usize,
    nodes_per_piece: usize,
) -> Result<MassCheck, TransferError> {
    let k = model.k();
    let grid = &f.grid;
    let same_domain = grid.dim() == k
        && (0..k).all(|i| {
            (grid.half_widths[i] - model.half_width(i)).abs() <= 1e-12 * model.half_width(i)
        });
    if !same_domain {
        return Err(TransferError::Invalid(
            "density grid does not cover Omega".into(),
        ));
    }
    let op = AveragedOperator::new(model, quad_order)?;
    let gamma = model.gamma();
    let l = model.l();
    let top = model.gamma_pow(k - 1);
    let unit = CompositeRule::new(-1.0, 1.0, nodes_per_piece.max(1), 1);
    let pair = CompositeRule::new(-1.0, 1.0, 2, 1);

    // transverse rule per axis, in y coordinates: (y, weight)
    let axes: Vec<Vec<(f64, f64)>> = (1..k)
        .map(|a| {
            let h = grid.box_size[a];
            grid.edges(a)[..grid.counts[a]]
                .iter()
                .flat_map(|&lo| {
                    pair.nodes.iter().zip(&pair.weights).map(move |(t, w)| {
                        ((lo + 0.5 * h * (1.0 + t)) / gamma, 0.5 * h / gamma * w)
                    })
                })
                .collect()
        })
        .collect();
    let outer_total: usize = axes.iter().map(Vec::len).product();
    let inner_edges = &grid.edges(0)[1..grid.counts[0]];

    let parts = (0..outer_total)
        .into_par_iter()
        .map(|flat| -> Result<MassCheck, TransferError> {
            let mut rest_y = Vec::with_capacity(k - 1);
            let mut weight = 1.0;
            let mut r = flat;
            for axis in &axes {
                let (y, w) = axis[r % axis.len()];
                r /= axis.len();
                rest_y.push(y);
                weight *= w;
            }
            let rest: Vec<f64> = rest_y
                .iter()
                .enumerate()
                .map(|(i, y)| y / model.gamma_pow(i))
                .collect();
            let mut fiber = FiberSolver::from_rest(model, rest, 0.0)?;

            let mut cuts = vec![-top * l, top * l];
            for &e in inner_edges {
                let p = fiber.phi(e)?;
                for &theta in &op.rule.nodes {
                    let v = p + theta;
                    cuts.push(top * (v - 2.0 * branch_index(v, l) as f64 * l));
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();

            let mut acc = MassCheck {
                min: f64::INFINITY,
                ..MassCheck::default()
            };
            for seg in cuts.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                if b <= a {
                    continue;
                }
                for (t, w) in unit.nodes.iter().zip(&unit.weights) {
                    let yk = 0.5 * (a + b) + 0.5 * (b - a) * t;
                    fiber.retarget(yk);
                    let p = op.apply_on(&fiber, f)?;
                    let dw = weight * 0.5 * (b - a) * w;
                    acc.integral += dw * p;
                    acc.l1 += dw * p.abs();
                    acc.min = acc.min.min(p);
                    acc.sup_abs = acc.sup_abs.max(p.abs());
                    acc.evaluations += 1;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = MassCheck {
        min: f64::INFINITY,
        ..MassCheck::default()
    };
    for p in parts {
        out.integral += p.integral;
        out.l1 += p.l1;
        out.min = out.min.min(p.min);
        out.sup_abs = out.sup_abs.max(p.sup_abs);
        out.evaluations += p.evaluations;
    }
    out.input_integral = f.integral();
    out.input_l1 = f.l1_norm();
    out.input_sup = f.sup_abs();
    out.linf_bound = linf_factor(model) * out.input_sup;
    Ok(out)
}

impl Default for MassCheck {
    fn default() -> Self {
        Self {
            integral: 0.0,
            l1: 0.0,
            min: 0.0,
            sup_abs: 0.0,
            input_integral: 0.0,
            input_l1: 0.0,
            input_sup: 0.0,
            linf_bound: 0.0,
            evaluations: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::apply_t;
    use crate::model::fixtures::{linear, reference};
    use crate::ulam::build_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_y(m: &Model, rng: &mut impl Rng) -> Vec<f64> {
        (0..m.k())
            .map(|i| rng.random_range(-1.0..1.0) * m.half_width(i))
            .collect()
    }

    #[test]
    fn linear_model_fixes_constants() {
        let m = linear();
        let op = AveragedOperator::new(&m, 4).unwrap();
        let one = |_: &[f64]| 1.0;
        let zero = |_: &[f64]| 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let y = random_y(&m, &mut rng);
            let theta = rng.random_range(-2.0..2.0);
            assert!((apply_transfer_theta(&one, &y, theta, &m).unwrap() - 1.0).abs() < 1e-12);
            assert!((op.apply(&one, &y).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(op.apply(&zero, &y).unwrap(), 0.0);
        }
        assert!(AveragedOperator::new(&m, 1).is_err());
    }

    #[test]
    fn pointwise_bound_and_positivity() {
        let m = reference();
        let op = AveragedOperator::new(&m, 3).unwrap();
        let f = |u: &[f64]| 1.0 + 0.9 * (3.0 * u[0]).sin() * (20.0 * u[1]).cos();
        let bound = linf_factor(&m) * 1.9;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ys: Vec<Vec<f64>> = (0..100).map(|_| random_y(&m, &mut rng)).collect();
        for p in op.apply_many(&f, &ys).unwrap() {
            assert!(p >= 0.0 && p <= bound, "{p} vs {bound}");
        }
    }

    #[test]
    fn markov_property_on_grid_densities() {
        let m = reference();
        let grid = build_grid(&m, &[8, 8]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2 {
            let values = (0..grid.total).map(|_| rng.random::<f64>()).collect();
            let f = DensityGrid::new(grid.clone(), values).unwrap().normalized();
            let c = integrate_transfer(&f, &m, 2, 2).unwrap();
            assert!((c.integral - 1.0).abs() < 1e-8, "{}", c.integral);
            assert!(c.min >= 0.0);
            assert!(c.sup_abs <= c.linf_bound);
        }
    }

    #[test]
    fn signed_densities_contract_in_l1() {
        let m = reference();
        let grid = build_grid(&m, &[4, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let values = (0..grid.total)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let f = DensityGrid::new(grid, values).unwrap();
        let c = integrate_transfer(&f, &m, 2, 3).unwrap();
        assert!((c.integral - c.input_integral).abs() < 1e-8 * c.input_l1);
        assert!(c.l1 <= c.input_l1 * (1.0 + 1e-8));
    }

    #[test]
    fn duality_against_monte_carlo() {
        // ∫_A P_θ f dm against ∫_{T_θ^{-1}A} f dm for one box A
        let m = reference();
        let theta = 0.37;
        let f = |u: &[f64]| 1.0 + 0.5 * (2.0 * u[0]).cos();
        let g = m.gamma();
        let (lo, hi) = ([-0.3, -0.2 * g], [0.1, 0.4 * g]);
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        let omega = m.omega_volume();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 40_000;
        let (mut s1, mut q1, mut s2, mut q2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let y = [
                rng.random_range(lo[0]..hi[0]),
                rng.random_range(lo[1]..hi[1]),
            ];
            let a = area * apply_transfer_theta(&f, &y, theta, &m).unwrap();
            s1 += a;
            q1 += a * a;
            let u = random_y(&m, &mut rng);
            let (t, _) = apply_t(&u, theta, &m).unwrap();
            let inside = (0..2).all(|i| t[i] >= lo[i] && t[i] < hi[i]);
            let b = if inside { omega * f(&u) } else { 0.0 };
            s2 += b;
            q2 += b * b;
        }
        let nf = n as f64;
        let (m1, m2) = (s1 / nf, s2 / nf);
        let se = ((q1 / nf - m1 * m1) / nf + (q2 / nf - m2 * m2) / nf).sqrt();
        assert!((m1 - m2).abs() <= 3.0 * se, "{m1} {m2} {se}");
    }
}
