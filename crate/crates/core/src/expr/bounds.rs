//! Extremes of a function and its derivatives over a closed tensor grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Expr, ExprError, Jet2, Scalar};

const MAX_NODES: usize = 1 << 26;

/// Closed axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    /// The cube `[-r, r]^k`.
    pub fn cube(r: f64, k: usize) -> Self {
        Self {
            lo: vec![-r; k],
            hi: vec![r; k],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    /// Per axis, min and max of the squared partial derivative.
    pub partial_sq_min: Vec<f64>,
    pub partial_sq_max: Vec<f64>,
    pub first_partial_abs_min: f64,
    pub first_partial_abs_max: f64,
    /// Largest Euclidean norm of the gradient.
    pub gradient_norm_max: f64,
    /// Largest Frobenius norm of the Hessian.
    pub hessian_norm_max: f64,
    /// Largest norm of the gradient of the first partial derivative.
    pub grad_first_partial_norm_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub method: String,
    pub resolution: Vec<usize>,
}

impl DerivativeBounds {
    fn empty(k: usize) -> Self {
        Self {
            partial_sq_min: vec![f64::INFINITY; k],
            partial_sq_max: vec![f64::NEG_INFINITY; k],
            first_partial_abs_min: f64::INFINITY,
            first_partial_abs_max: f64::NEG_INFINITY,
            gradient_norm_max: f64::NEG_INFINITY,
            hessian_norm_max: f64::NEG_INFINITY,
            grad_first_partial_norm_max: f64::NEG_INFINITY,
            phi_min: f64::INFINITY,
            phi_max: f64::NEG_INFINITY,
            method: String::new(),
            resolution: Vec::new(),
        }
    }

    fn absorb(&mut self, v: f64, g: &[f64], h: &[f64]) {
        let k = g.len();
        for i in 0..k {
            let sq = g[i] * g[i];
            self.partial_sq_min[i] = self.partial_sq_min[i].min(sq);
            self.partial_sq_max[i] = self.partial_sq_max[i].max(sq);
        }
        if k > 0 {
            self.first_partial_abs_min = self.first_partial_abs_min.min(g[0].abs());
            self.first_partial_abs_max = self.first_partial_abs_max.max(g[0].abs());
            let row: f64 = h[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
            self.grad_first_partial_norm_max = self.grad_first_partial_norm_max.max(row);
        }
        self.gradient_norm_max = self
            .gradient_norm_max
            .max(g.iter().map(|x| x * x).sum::<f64>().sqrt());
        self.hessian_norm_max = self
            .hessian_norm_max
            .max(h.iter().map(|x| x * x).sum::<f64>().sqrt());
        self.phi_min = self.phi_min.min(v);
        self.phi_max = self.phi_max.max(v);
    }

    fn merge(mut self, o: Self) -> Self {
        for i in 0..self.partial_sq_min.len() {
            self.partial_sq_min[i] = self.partial_sq_min[i].min(o.partial_sq_min[i]);
            self.partial_sq_max[i] = self.partial_sq_max[i].max(o.partial_sq_max[i]);
        }
        self.first_partial_abs_min = self.first_partial_abs_min.min(o.first_partial_abs_min);
        self.first_partial_abs_max = self.first_partial_abs_max.max(o.first_partial_abs_max);
        self.gradient_norm_max = self.gradient_norm_max.max(o.gradient_norm_max);
        self.hessian_norm_max = self.hessian_norm_max.max(o.hessian_norm_max);
        self.grad_first_partial_norm_max = self
            .grad_first_partial_norm_max
            .max(o.grad_first_partial_norm_max);
        self.phi_min = self.phi_min.min(o.phi_min);
        self.phi_max = self.phi_max.max(o.phi_max);
        self
    }
}

/// Sample `ast` on the closed tensor grid with `resolution[i]` nodes on
/// axis `i` (endpoints included).
pub fn sampled_derivative_bounds(
    ast: &Expr,
    domain: &SampleBox,
    resolution: &[usize],
) -> Result<DerivativeBounds, ExprError> {
    let ones = vec![1.0; ast.arity()];
    sampled_derivative_bounds_scaled(ast, domain, resolution, &ones)
}

/// Like [`sampled_derivative_bounds`] for `x ↦ f(diag(scale)·x)`, with the
/// box given in the unscaled coordinates of `f`. Derivatives are reported
/// for the composed map.
pub fn sampled_derivative_bounds_scaled(
    ast: &Expr,
    domain: &SampleBox,
    resolution: &[usize],
    scale: &[f64],
) -> Result<DerivativeBounds, ExprError> {
    let k = ast.arity();
    if domain.dim() != k || resolution.len() != k || scale.len() != k {
        return Err(ExprError::Arity {
            expected: k,
            got: domain.dim().min(resolution.len()),
        });
    }
    if let Some(n) = resolution.iter().find(|&&n| n < 2) {
        return Err(ExprError::Sampling(format!("resolution {n} below 2")));
    }
    let total = resolution
        .iter()
        .try_fold(1usize, |acc, &n| {
            acc.checked_mul(n).filter(|&t| t <= MAX_NODES)
        })
        .ok_or_else(|| ExprError::Sampling(format!("more than {MAX_NODES} grid nodes")))?;

    let coord = |axis: usize, i: usize| {
        let n = resolution[axis] - 1;
        if i == n {
            domain.hi[axis]
        } else {
            domain.lo[axis] + (domain.hi[axis] - domain.lo[axis]) * i as f64 / n as f64
        }
    };

    let mut out = (0..total)
        .into_par_iter()
        .try_fold(
            || DerivativeBounds::empty(k),
            |mut acc, flat| {
                let mut rest = flat;
                let mut x = vec![0.0; k];
                for (axis, xi) in x.iter_mut().enumerate() {
                    *xi = coord(axis, rest % resolution[axis]);
                    rest /= resolution[axis];
                }
                let jet = ast.eval_with(|i| Jet2::var(x[i], i, k))?;
                let (v, g, h) = full(jet, k);
                let g: Vec<f64> = g.iter().zip(scale).map(|(d, s)| d * s).collect();
                let mut hs = h;
                for i in 0..k {
                    for j in 0..k {
                        hs[i * k + j] *= scale[i] * scale[j];
                    }
                }
                if g.iter().chain(&hs).any(|d| !d.is_finite()) {
                    return Err(ExprError::Domain(format!("non-finite derivative at {x:?}")));
                }
                acc.absorb(v, &g, &hs);
                Ok(acc)
            },
        )
        .try_reduce(|| DerivativeBounds::empty(k), |a, b| Ok(a.merge(b)))?;
    out.method = "nested forward-mode duals (second-order jets)".into();
    out.resolution = resolution.to_vec();
    Ok(out)
}

fn full(jet: Jet2, k: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let v = jet.value();
    if jet.dim() == k {
        (v, jet.g, jet.h)
    } else {
        (v, vec![0.0; k], vec![0.0; k * k])
    }
}
