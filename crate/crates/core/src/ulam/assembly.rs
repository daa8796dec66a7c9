//! Ulam matrix assembly, with interchangeable strategies for the
//! transition probabilities of a source box.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Grid, StochasticMatrix, UlamError};
use crate::model::Model;
use crate::numeric::CompositeRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyOptions {
    pub strategy: String,
    /// Gauss–Legendre order of the `θ` rule used by the `quadrature` strategy.
    pub theta_order: usize,
    /// Subsamples per axis and box.
    pub subsamples: usize,
    /// Seed of the `montecarlo` strategy.
    pub seed: u64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            strategy: "cdf".into(),
            theta_order: 4,
            subsamples: 8,
            seed: 0,
        }
    }
}

/// Shared state handed to a strategy while one matrix is assembled.
pub struct Assembly<'a> {
    pub model: &'a Model,
    pub grid: &'a Grid,
    pub options: &'a AssemblyOptions,
    pub theta_rule: CompositeRule,
    /// Stride of the last axis in the flat box index.
    last_stride: usize,
}

impl Assembly<'_> {
    /// The `s^k` tensor midpoints of box `source`.
    pub fn midpoints(&self, source: usize) -> Vec<Vec<f64>> {
        let s = self.options.subsamples;
        let k = self.grid.dim();
        let lo = self.grid.lower(source);
        (0..s.pow(k as u32))
            .map(|flat| {
                let mut r = flat;
                (0..k)
                    .map(|a| {
                        let m = r % s;
                        r /= s;
                        lo[a] + (m as f64 + 0.5) / s as f64 * self.grid.box_size[a]
                    })
                    .collect()
            })
            .collect()
    }

    /// Flat index contribution of the shifted coordinates `u₂/γ, …, u_k/γ`
    /// of `T_θ(u)`, which do not depend on `θ`.
    pub fn transverse_index(&self, u: &[f64]) -> Option<usize> {
        let g = self.model.gamma();
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..self.grid.dim() - 1 {
            idx += self.grid.cell(a, u[a + 1] / g)? * stride;
            stride *= self.grid.counts[a];
        }
        Some(idx)
    }

    pub fn last_stride(&self) -> usize {
        self.last_stride
    }
}

pub trait AssemblyStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    /// Unnormalized `(target, probability)` pairs for one source box.
    fn row(&self, ctx: &Assembly<'_>, source: usize) -> Result<Vec<(usize, f64)>, UlamError>;
}

fn merge(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|&(c, _)| c);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len() / 4 + 1);
    for (c, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

/// Integrates over `θ` exactly through the law's distribution function:
/// for a subsample with `Φ₀(Γu) = v`, the last coordinate lands in the bin
/// `[a, b)` (in units of `γ^{k−1}`) with probability
/// `Σ_j P(a + 2jL − v ≤ Θ < b + 2jL − v)`.
#[derive(Debug, Default)]
pub struct CdfStrategy;

impl AssemblyStrategy for CdfStrategy {
    fn name(&self) -> &'static str {
        "cdf"
    }

    fn row(&self, ctx: &Assembly<'_>, source: usize) -> Result<Vec<(usize, f64)>, UlamError> {
        let model = ctx.model;
        let k = model.k();
        let l = model.l();
        let n = ctx.grid.counts[k - 1];
        let (tmin, tmax) = model.law.support();
        let points = ctx.midpoints(source);
        let w = 1.0 / points.len() as f64;
        let edges: Vec<f64> = (0..=n)
            .map(|m| -l + 2.0 * l * m as f64 / n as f64)
            .collect();
        let mut mass = vec![0.0; n];
        let mut row = Vec::new();
        let mut x = vec![0.0; k];
        for u in &points {
            let Some(base) = ctx.transverse_index(u) else {
                return Err(UlamError::Invalid(format!(
                    "shifted image of {u:?} leaves the grid"
                )));
            };
            model.dilate(u, &mut x);
            let v = model
                .spec
                .phi0
                .eval(&x)
                .map_err(crate::model::ModelError::from)?;
            let j_lo = ((tmin + v - l) / (2.0 * l)).floor() as i64;
            let j_hi = ((tmax + v + l) / (2.0 * l)).floor() as i64;
            mass.iter_mut().for_each(|m| *m = 0.0);
            for j in j_lo..=j_hi {
                let shift = 2.0 * j as f64 * l - v;
                let mut prev = model.law.cdf_left(edges[0] + shift);
                for m in 0..n {
                    let next = model.law.cdf_left(edges[m + 1] + shift);
                    mass[m] += next - prev;
                    prev = next;
                }
            }
            for (m, &p) in mass.iter().enumerate() {
                if p > 0.0 {
                    row.push((base + m * ctx.last_stride, w * p));
                }
            }
        }
        Ok(merge(row))
    }
}

/// Maps every subsample through `T_θ` at the nodes of the `θ` rule.
#[derive(Debug, Default)]
pub struct QuadratureStrategy;

impl AssemblyStrategy for QuadratureStrategy {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn row(&self, ctx: &Assembly<'_>, source: usize) -> Result<Vec<(usize, f64)>, UlamError> {
        let points = ctx.midpoints(source);
        let w = 1.0 / points.len() as f64;
        let mut out = vec![0.0; ctx.grid.dim()];
        let mut row = Vec::new();
        for u in &points {
            for (&theta, &wt) in ctx.theta_rule.nodes.iter().zip(&ctx.theta_rule.weights) {
                ctx.model.apply_t_into(u, theta, &mut out)?;
                let target = ctx
                    .grid
                    .locate(&out)
                    .ok_or_else(|| UlamError::Invalid(format!("image {out:?} leaves the grid")))?;
                row.push((target, w * wt));
            }
        }
        Ok(merge(row))
    }
}

/// Uniform random points in the source box with independent draws of `θ`,
/// one generator stream per box.
#[derive(Debug, Default)]
pub struct MonteCarloStrategy;

impl AssemblyStrategy for MonteCarloStrategy {
    fn name(&self) -> &'static str {
        "montecarlo"
    }

    fn row(&self, ctx: &Assembly<'_>, source: usize) -> Result<Vec<(usize, f64)>, UlamError> {
        let k = ctx.grid.dim();
        let count = ctx.options.subsamples.pow(k as u32);
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.options.seed);
        rng.set_stream(source as u64);
        let lo = ctx.grid.lower(source);
        let w = 1.0 / count as f64;
        let mut u = vec![0.0; k];
        let mut out = vec![0.0; k];
        let mut row = Vec::with_capacity(count);
        for _ in 0..count {
            for a in 0..k {
                u[a] = lo[a] + rng.random::<f64>() * ctx.grid.box_size[a];
            }
            let theta = ctx.model.law.sample(&mut rng);
            ctx.model.apply_t_into(&u, theta, &mut out)?;
            let target = ctx
                .grid
                .locate(&out)
                .ok_or_else(|| UlamError::Invalid(format!("image {out:?} leaves the grid")))?;
            row.push((target, w));
        }
        Ok(merge(row))
    }
}

pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn AssemblyStrategy>>,
}

impl StrategyRegistry {
    pub fn with_builtins() -> Self {
        let mut r = Self {
            strategies: BTreeMap::new(),
        };
        r.register(Box::new(CdfStrategy));
        r.register(Box::new(QuadratureStrategy));
        r.register(Box::new(MonteCarloStrategy));
        r
    }

    pub fn register(&mut self, strategy: Box<dyn AssemblyStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.strategies.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn AssemblyStrategy, UlamError> {
        self.strategies
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| {
                let known: Vec<_> = self.names().collect();
                UlamError::Invalid(format!(
                    "unknown assembly strategy `{name}` (known: {})",
                    known.join(", ")
                ))
            })
    }
}

pub fn strategies() -> &'static StrategyRegistry {
    static REGISTRY: OnceLock<StrategyRegistry> = OnceLock::new();
    REGISTRY.get_or_init(StrategyRegistry::with_builtins)
}

/// Ulam matrix of the averaged operator on `grid`, rows normalized.
pub fn assemble_ulam(
    model: &Model,
    grid: &Grid,
    options: &AssemblyOptions,
) -> Result<StochasticMatrix, UlamError> {
    assemble_with(strategies().get(&options.strategy)?, model, grid, options)
}

pub fn assemble_with(
    strategy: &dyn AssemblyStrategy,
    model: &Model,
    grid: &Grid,
    options: &AssemblyOptions,
) -> Result<StochasticMatrix, UlamError> {
    let k = model.k();
    if options.subsamples < 2 {
        return Err(UlamError::Invalid(format!(
            "subsamples {} below 2",
            options.subsamples
        )));
    }
    if options.theta_order < 2 {
        return Err(UlamError::Invalid(format!(
            "theta order {} below 2",
            options.theta_order
        )));
    }
    let same = grid.dim() == k
        && (0..k).all(|i| {
            (grid.half_widths[i] - model.half_width(i)).abs() <= 1e-12 * model.half_width(i)
        });
    if !same {
        return Err(UlamError::Invalid("grid does not cover Omega".into()));
    }
    let ctx = Assembly {
        model,
        grid,
        options,
        theta_rule: model.law.quadrature(options.theta_order),
        last_stride: grid.counts[..k - 1].iter().product(),
    };
    let rows = (0..grid.total)
        .into_par_iter()
        .map(|i| strategy.row(&ctx, i))
        .collect::<Result<Vec<_>, _>>()?;
    StochasticMatrix::from_rows(rows)
}
