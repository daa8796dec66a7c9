//! The slanted boundaries `Σ_j^θ = {u ∈ Ω : Φ₀(Γu) + θ = (2j−1)L}` and their
//! mutual distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Model, ModelError};
use crate::numeric::bisect;

/// Sampled points of one boundary `Σ_j^θ`, in `u`-coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub j: i64,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySeparation {
    pub theta: f64,
    pub boundaries: usize,
    /// `None` when fewer than two boundaries meet `Ω`.
    pub min_distance: Option<f64>,
    pub lower_bound: f64,
    pub status: String,
    pub ok: bool,
}

/// Trace every nonempty `Σ_j^θ` by solving for `x₁` over a grid of
/// `sampling` nodes on each remaining axis of `[−L, L]`.
pub fn boundary_traces(
    model: &Model,
    theta: f64,
    sampling: usize,
) -> Result<Vec<BoundaryTrace>, ModelError> {
    let k = model.k();
    let l = model.l();
    let g = &model.geometry;
    let j_lo = ((theta + g.phi_min + l) / (2.0 * l)).floor() as i64 - 1;
    let j_hi = ((theta + g.phi_max + l) / (2.0 * l)).ceil() as i64 + 1;
    let sampling = sampling.max(2);
    let rest_count = sampling.pow(k as u32 - 1);

    let traces: Result<Vec<_>, ModelError> = (j_lo..=j_hi)
        .into_par_iter()
        .map(|j| {
            let level = (2 * j - 1) as f64 * l - theta;
            let mut points = Vec::new();
            let mut x = vec![0.0; k];
            for flat in 0..rest_count {
                let mut rest = flat;
                for xi in x.iter_mut().skip(1) {
                    *xi = -l + 2.0 * l * (rest % sampling) as f64 / (sampling - 1) as f64;
                    rest /= sampling;
                }
                let mut eval = |t: f64| {
                    x[0] = t;
                    model.spec.phi0.eval(&x).map(|v| v - level)
                };
                let (fa, fb) = (eval(-l)?, eval(l)?);
                if fa * fb > 0.0 {
                    continue;
                }
                let mut err = None;
                let root = bisect(
                    |t| {
                        eval(t).unwrap_or_else(|e| {
                            err = Some(e);
                            0.0
                        })
                    },
                    -l,
                    l,
                    1e-12,
                )?;
                if let Some(e) = err {
                    return Err(e.into());
                }
                x[0] = root;
                let mut u = vec![0.0; k];
                model.contract(&x, &mut u);
                points.push(u);
            }
            Ok(BoundaryTrace { j, points })
        })
        .collect();
    Ok(traces?
        .into_iter()
        .filter(|t| !t.points.is_empty())
        .collect())
}

/// Smallest distance between sampled points of distinct boundaries, checked
/// against `2L/(M¹·M_Γ)`.
pub fn boundary_separation(
    model: &Model,
    theta: f64,
    sampling: usize,
) -> Result<BoundarySeparation, ModelError> {
    let traces = boundary_traces(model, theta, sampling)?;
    let lower_bound = model.geometry.separation_bound;
    if traces.len() < 2 {
        return Ok(BoundarySeparation {
            theta,
            boundaries: traces.len(),
            min_distance: None,
            lower_bound,
            status: "vacuous".into(),
            ok: true,
        });
    }
    let mut pts: Vec<(i64, &[f64])> = traces
        .iter()
        .flat_map(|t| t.points.iter().map(move |p| (t.j, p.as_slice())))
        .collect();
    pts.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
    let mut best = f64::INFINITY;
    for (i, (ji, pi)) in pts.iter().enumerate() {
        for (jj, pj) in &pts[i + 1..] {
            if pj[0] - pi[0] >= best {
                break;
            }
            if ji == jj {
                continue;
            }
            let d = pi
                .iter()
                .zip(pj.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
    }
    let ok = best >= lower_bound;
    Ok(BoundarySeparation {
        theta,
        boundaries: traces.len(),
        min_distance: Some(best),
        lower_bound,
        status: if ok { "ok" } else { "violated" }.into(),
        ok,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{linear, reference, spec};
    use super::super::{Model, PerturbationSpec};
    use super::*;

    #[test]
    fn linear_planes_are_one_hundredth_apart() {
        let m = linear();
        let s = boundary_separation(&m, 0.0, 16).unwrap();
        // levels (2j-1) in (-200, 200) give 200 planes
        assert_eq!(s.boundaries, 200);
        let d = s.min_distance.unwrap();
        assert!((d - 0.01).abs() < 1e-10, "{d}");
        assert!((s.lower_bound - m.gamma() / 100.0).abs() < 1e-15);
        assert!(s.ok);
    }

    #[test]
    fn single_boundary_is_vacuous() {
        let m = Model::new(spec("0.6*x1", 1, 2.0, PerturbationSpec::fixed(0.0)), 8).unwrap();
        let s = boundary_separation(&m, 0.5, 8).unwrap();
        assert_eq!(s.boundaries, 1);
        assert_eq!(s.status, "vacuous");
        assert!(s.ok);
    }

    #[test]
    fn reference_model_separation_holds() {
        let m = reference();
        for theta in [-1.3, 0.0, 0.77] {
            let s = boundary_separation(&m, theta, 32).unwrap();
            assert!(s.ok, "{s:?}");
            assert!(s.boundaries >= 199);
        }
    }

    #[test]
    fn traces_lie_on_their_level_sets() {
        let m = reference();
        for t in boundary_traces(&m, 0.4, 8).unwrap().iter().step_by(37) {
            for u in &t.points {
                let mut x = vec![0.0; 2];
                m.dilate(u, &mut x);
                let v = m.spec.phi0.eval(&x).unwrap() + 0.4;
                assert!((v - (2 * t.j - 1) as f64).abs() < 1e-9);
            }
        }
    }
}
