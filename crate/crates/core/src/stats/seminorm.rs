//! Estimates of the oscillation seminorm
//! `|f|₁ = sup_ε ε^{−1} ∫_{R^k} osc(f, B_ε(x)) dx`, with `f` extended by
//! zero outside its domain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::transfer::Observable;
use crate::ulam::DensityGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub value: f64,
    /// `(ε, ε^{−1}∫osc)` for each requested radius.
    pub table: Vec<(f64, f64)>,
}

/// Oscillation over discrete balls of boxes: the ball around a box holds
/// every box whose center lies within `ε` of its center. Boxes outside the
/// grid count as zero, and the integral runs over every box, inside or in
/// the surrounding halo, whose ball meets the grid.
pub fn osc_seminorm(f: &DensityGrid, eps_list: &[f64]) -> Result<SeminormEstimate, StatsError> {
    if eps_list.is_empty() {
        return Err(StatsError::Invalid("no radii given".into()));
    }
    let grid = &f.grid;
    let diam = grid.box_diameter();
    let mut table = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps >= 2.0 * diam) {
            return Err(StatsError::Invalid(format!(
                "eps {eps} below two box diameters ({})",
                2.0 * diam
            )));
        }
        table.push((eps, ball_integral(f, eps) / eps));
    }
    let value = table.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(SeminormEstimate { value, table })
}

fn ball_integral(f: &DensityGrid, eps: f64) -> f64 {
    let grid = &f.grid;
    let k = grid.dim();
    let reach: Vec<i64> = grid
        .box_size
        .iter()
        .map(|h| (eps / h).floor() as i64)
        .collect();
    // offsets (d_a) with Σ (d_a h_a)² ≤ ε²
    let mut offsets: Vec<Vec<i64>> = vec![vec![]];
    for a in 0..k {
        offsets = offsets
            .into_iter()
            .flat_map(|o| (-reach[a]..=reach[a]).map(move |d| [o.clone(), vec![d]].concat()))
            .collect();
    }
    let r2 = eps * eps * (1.0 + 1e-12);
    offsets.retain(|o| {
        o.iter()
            .zip(&grid.box_size)
            .map(|(&d, h)| (d as f64 * h).powi(2))
            .sum::<f64>()
            <= r2
    });

    let ext: Vec<i64> = (0..k)
        .map(|a| grid.counts[a] as i64 + 2 * reach[a])
        .collect();
    let total: usize = ext.iter().map(|&e| e as usize).product();
    let value_at = |m: &[i64]| -> f64 {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for a in 0..k {
            if m[a] < 0 || m[a] >= grid.counts[a] as i64 {
                return 0.0;
            }
            idx += m[a] as usize * stride;
            stride *= grid.counts[a];
        }
        f.values[idx]
    };
    let sum: f64 = (0..total)
        .into_par_iter()
        .with_min_len(64)
        .map(|flat| {
            let mut r = flat;
            let center: Vec<i64> = (0..k)
                .map(|a| {
                    let m = (r % ext[a] as usize) as i64 - reach[a];
                    r /= ext[a] as usize;
                    m
                })
                .collect();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut m = vec![0i64; k];
            for o in &offsets {
                for a in 0..k {
                    m[a] = center[a] + o[a];
                }
                let v = value_at(&m);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            hi - lo
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    sum * grid.box_volume
}

/// Small-radius estimate of `|f|₁` for a function given pointwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallEpsSeminorm {
    /// `2·TV(f)` at the full node resolution.
    pub value: f64,
    /// The same on every other node.
    pub coarse: f64,
    /// `|value − coarse|`, used as the estimator's resolution error.
    pub resolution_error: f64,
    pub nodes: Vec<usize>,
}

/// As `ε → 0`, `ε^{−1}∫osc(f, B_ε)` tends to twice the total variation of
/// the zero extension of `f`: `2∫‖∇f‖` plus twice the jump integrals,
/// including the jump to zero across `∂Ω`. This estimates that limit from
/// samples on a closed node grid of the box `Π[−w_a, w_a]`, using the cell
/// gradients of the multilinear interpolant and one halo layer of zeros.
pub fn small_eps_seminorm_from_samples(
    samples: &[f64],
    half_widths: &[f64],
    nodes: &[usize],
) -> Result<SmallEpsSeminorm, StatsError> {
    let k = half_widths.len();
    if nodes.len() != k || nodes.iter().any(|&n| n < 5 || (n - 1) % 2 != 0) {
        return Err(StatsError::Invalid(
            "need an odd node count of at least 5 per axis".into(),
        ));
    }
    if samples.len() != nodes.iter().product::<usize>() {
        return Err(StatsError::Invalid(
            "sample count does not match the node grid".into(),
        ));
    }
    let fine = total_variation(samples, half_widths, nodes, 1);
    let coarse = total_variation(samples, half_widths, nodes, 2);
    Ok(SmallEpsSeminorm {
        value: 2.0 * fine,
        coarse: 2.0 * coarse,
        resolution_error: 2.0 * (fine - coarse).abs(),
        nodes: nodes.to_vec(),
    })
}

/// Nodes of the closed grid used by [`small_eps_seminorm_from_samples`],
/// axis 0 fastest.
pub fn seminorm_nodes(half_widths: &[f64], nodes: &[usize]) -> Vec<Vec<f64>> {
    let total: usize = nodes.iter().product();
    (0..total)
        .map(|flat| {
            let mut r = flat;
            half_widths
                .iter()
                .zip(nodes)
                .map(|(&w, &n)| {
                    let i = r % n;
                    r /= n;
                    if i == n - 1 {
                        w
                    } else {
                        -w + 2.0 * w * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        })
        .collect()
}

/// `2·TV` estimate for an [`Observable`] on `Π[−w_a, w_a]`.
pub fn small_eps_seminorm<F: Observable + ?Sized>(
    f: &F,
    half_widths: &[f64],
    nodes: &[usize],
) -> Result<SmallEpsSeminorm, StatsError> {
    let pts = seminorm_nodes(half_widths, nodes);
    let samples: Vec<f64> = pts.par_iter().map(|u| f.at(u)).collect();
    small_eps_seminorm_from_samples(&samples, half_widths, nodes)
}

fn total_variation(samples: &[f64], half_widths: &[f64], nodes: &[usize], step: usize) -> f64 {
    let k = half_widths.len();
    // sub-grid of every `step`-th node, padded by one ring of zeros
    let sub: Vec<usize> = nodes.iter().map(|&n| (n - 1) / step + 1).collect();
    let h: Vec<f64> = half_widths
        .iter()
        .zip(&sub)
        .map(|(&w, &n)| 2.0 * w / (n - 1) as f64)
        .collect();
    let padded: Vec<usize> = sub.iter().map(|n| n + 2).collect();
    let value = |m: &[usize]| -> f64 {
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..k {
            if m[a] == 0 || m[a] == padded[a] - 1 {
                return 0.0;
            }
            idx += (m[a] - 1) * step * stride;
            stride *= nodes[a];
        }
        samples[idx]
    };
    let cells: Vec<usize> = padded.iter().map(|n| n - 1).collect();
    let total: usize = cells.iter().product();
    let cell_volume: f64 = h.iter().product();
    let corners = 1usize << k;
    let parts: Vec<f64> = (0..total)
        .into_par_iter()
        .with_min_len(256)
        .map(|flat| {
            let mut r = flat;
            let base: Vec<usize> = cells
                .iter()
                .map(|&c| {
                    let i = r % c;
                    r /= c;
                    i
                })
                .collect();
            let mut grad = vec![0.0; k];
            let mut m = vec![0usize; k];
            for c in 0..corners {
                for a in 0..k {
                    m[a] = base[a] + (c >> a & 1);
                }
                let v = value(&m);
                for a in 0..k {
                    let sign = if c >> a & 1 == 1 { 1.0 } else { -1.0 };
                    grad[a] += sign * v;
                }
            }
            let scale = (corners / 2) as f64;
            let norm = grad
                .iter()
                .zip(&h)
                .map(|(g, hh)| (g / (scale * hh)).powi(2))
                .sum::<f64>()
                .sqrt();
            norm * cell_volume
        })
        .collect();
    parts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ulam::{Grid, MAX_BOXES};

    #[test]
    fn zero_function() {
        let g = Grid::new(vec![1.0, 0.5], vec![16, 16], MAX_BOXES).unwrap();
        let f = DensityGrid::constant(g.clone(), 0.0);
        let e = osc_seminorm(&f, &[3.0 * g.box_diameter()]).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn indicator_of_unit_interval() {
        // [-2, 2] with 64 boxes; the indicator of [0, 1] has two unit jumps
        let g = Grid::new(vec![2.0], vec![64], MAX_BOXES).unwrap();
        let values = (0..64)
            .map(|i| if (32..48).contains(&i) { 1.0 } else { 0.0 })
            .collect();
        let f = DensityGrid::new(g.clone(), values).unwrap();
        let h = g.box_size[0];
        let e = osc_seminorm(&f, &[2.0 * h, 3.0 * h, 4.0 * h]).unwrap();
        for (_, v) in &e.table {
            assert!((v - 4.0).abs() < 1e-12, "{v}");
        }
        assert!(osc_seminorm(&f, &[h]).is_err());
    }

    #[test]
    fn grid_refinement_moves_toward_continuum() {
        // indicator of a disc of radius 1/2: the annulus of width 2ε has area 2πε
        let target = 2.0 * 2.0 * std::f64::consts::PI * 0.5;
        let mut last = f64::INFINITY;
        for n in [32usize, 64, 128] {
            let g = Grid::new(vec![1.0, 1.0], vec![n, n], MAX_BOXES).unwrap();
            let f = DensityGrid::project(
                g.clone(),
                &|u: &[f64]| {
                    if u[0] * u[0] + u[1] * u[1] < 0.25 {
                        1.0
                    } else {
                        0.0
                    }
                },
                1,
            );
            let e = osc_seminorm(&f, &[0.25]).unwrap();
            let err = (e.value - target).abs();
            assert!(err < last, "{n}: {err} vs {last}");
            last = err;
        }
    }

    #[test]
    fn total_variation_limits() {
        // a constant c on [-1,1]x[-0.5,0.5]: the only variation is the jump
        // across the boundary, 2 * c * perimeter, up to the four corner cells
        let c = 3.0;
        let one = |_: &[f64]| c;
        let e = small_eps_seminorm(&one, &[1.0, 0.5], &[65, 33]).unwrap();
        let h = 2.0 / 64.0;
        assert!((e.value - 2.0 * c * 6.0).abs() < 8.0 * c * h, "{}", e.value);
        // a linear ramp vanishing on x = -1 adds 2 * ∫|∇f|
        let ramp = |u: &[f64]| u[0] + 1.0;
        let e = small_eps_seminorm(&ramp, &[1.0, 0.5], &[129, 65]).unwrap();
        // ∫|∇f| = 2, jump 2 on the right edge of length 1, sides carry ∫f = 2 each
        let want = 2.0 * (2.0 + 2.0 + 2.0 + 2.0);
        assert!((e.value - want).abs() < 0.1, "{} vs {want}", e.value);
        assert!(e.resolution_error < 0.2);
        assert!(small_eps_seminorm(&one, &[1.0], &[4]).is_err());
    }
}
