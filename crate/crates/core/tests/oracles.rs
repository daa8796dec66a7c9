//! Closed-form and small-case oracles, exercised through the public API.

use std::f64::consts::PI;

use gapkit_core::expr::{
    evaluate_with_gradient, parse_expression, sampled_derivative_bounds, ExprError, SampleBox,
};
use gapkit_core::model::{
    apply_s, apply_t, boundary_separation, branch_index, crossing_threshold, derive_geometry, eta0,
    unit_ball_volume, ExpansionDiagnostics, Model, ModelSpec, PerturbationSpec,
};
use gapkit_core::stats::{
    correlation_decay, empirical_vs_stationary, marginal_density, osc_seminorm, simulate_process,
};
use gapkit_core::transfer::{
    apply_transfer_averaged, apply_transfer_theta, enumerate_branches, inverse_branch,
    lasota_yorke_constants,
};
use gapkit_core::ulam::{
    assemble_ulam, build_grid, stationary_density, subdominant_modulus, AssemblyOptions,
    DensityGrid, Grid, StationaryOptions, StochasticMatrix, SubdominantOptions, MAX_BOXES,
};

fn spec(phi0: &str, k: usize, sigma: f64, law: PerturbationSpec) -> ModelSpec {
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

fn model(phi0: &str, k: usize, sigma: f64, law: PerturbationSpec) -> Model {
    Model::new(spec(phi0, k, sigma, law), 64).unwrap()
}

fn reference() -> Model {
    model(
        "200*x1 + sin(x2)",
        2,
        150.0,
        PerturbationSpec::gaussian(0.0, 0.5),
    )
}

fn linear() -> Model {
    model("200*x1", 2, 150.0, PerturbationSpec::gaussian(0.0, 0.5))
}

fn gamma() -> f64 {
    165f64.powf(-0.5)
}

/// Larger root `s` of `s² − b s + 1 = 0`, squared.
fn quadratic_threshold(b: f64) -> f64 {
    let s = (b + (b * b - 4.0).sqrt()) / 2.0;
    s * s
}

mod expr {
    use super::*;

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_expression("x3", 2),
            Err(ExprError::VariableOutOfRange { index: 3, .. })
        ));
        assert!(matches!(
            parse_expression("2*(x1", 1),
            Err(ExprError::Syntax { position: 5, .. })
        ));
        assert!(matches!(
            parse_expression("foo(x1)", 1),
            Err(ExprError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn gradients() {
        let e = parse_expression("200*x1 + sin(x2)", 2).unwrap();
        assert_eq!(
            evaluate_with_gradient(&e, &[0.5, 0.0]).unwrap(),
            (100.0, vec![200.0, 1.0])
        );
        let e = parse_expression("x1*x2", 2).unwrap();
        assert_eq!(
            evaluate_with_gradient(&e, &[2.0, 3.0]).unwrap(),
            (6.0, vec![3.0, 2.0])
        );
        let e = parse_expression("sin(x1)", 1).unwrap();
        let (v, g) = evaluate_with_gradient(&e, &[PI / 2.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-15 && g[0].abs() < 1e-15);
    }

    #[test]
    fn grammar_precedence() {
        let e = parse_expression("-2^2^3 + pi/2*x1", 1).unwrap();
        assert!((e.eval(&[2.0]).unwrap() - (-256.0 + PI)).abs() < 1e-12);
    }

    #[test]
    fn derivative_bounds() {
        let e = parse_expression("200*x1 + sin(x2)", 2).unwrap();
        let b = sampled_derivative_bounds(&e, &SampleBox::cube(1.5, 2), &[64, 64]).unwrap();
        assert_eq!(
            (b.partial_sq_min[0], b.partial_sq_max[0]),
            (40000.0, 40000.0)
        );
        assert!((b.partial_sq_min[1] - 1.5f64.cos().powi(2)).abs() < 1e-12);
        // 64 closed nodes on [−1.5, 1.5] miss 0; the nearest sits at ±1.5/63
        assert!((b.partial_sq_max[1] - (1.5f64 / 63.0).cos().powi(2)).abs() < 1e-12);

        let c = parse_expression("3", 1).unwrap();
        let b = sampled_derivative_bounds(&c, &SampleBox::cube(1.0, 1), &[8]).unwrap();
        assert_eq!((b.partial_sq_max[0], b.phi_min, b.phi_max), (0.0, 3.0, 3.0));

        let x = parse_expression("x1", 1).unwrap();
        let b = sampled_derivative_bounds(&x, &SampleBox::new(vec![0.0], vec![1.0]), &[2]).unwrap();
        assert_eq!(
            (
                b.partial_sq_min[0],
                b.partial_sq_max[0],
                b.phi_min,
                b.phi_max
            ),
            (1.0, 1.0, 0.0, 1.0)
        );
    }
}

mod model_ops {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn eta0_and_thresholds() {
        let direct = 1.0 / 150f64.sqrt() + 16.0 * (2.0 / PI) / (150f64.sqrt() - 1.0);
        assert!((eta0(150.0, 4, 2).unwrap() - direct).abs() < 1e-14);
        let far = 1e-6 + 16.0 * (2.0 / PI) / (1e6 - 1.0);
        assert!((eta0(1e12, 4, 2).unwrap() - far).abs() < 1e-15);
        assert!(eta0(1.0, 4, 2).is_err());

        for (y, b) in [(4, 2.0 + 32.0 / PI), (3, 2.0 + 24.0 / PI)] {
            let t = crossing_threshold(y, 2);
            assert!((t - quadratic_threshold(b)).abs() < 1e-9 * t, "Y={y}: {t}");
        }
        for (y, k) in [(1, 1), (3, 2), (4, 3), (6, 5)] {
            assert!((eta0(crossing_threshold(y, k), y, k).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn geometry_of_reference_and_failures() {
        let g = derive_geometry(
            &spec(
                "200*x1 + sin(x2)",
                2,
                150.0,
                PerturbationSpec::gaussian(0.0, 0.5),
            ),
            64,
        )
        .unwrap();
        assert!(g.ok);
        assert!((g.gamma - gamma()).abs() < 1e-15);
        assert_eq!(g.y, 4);
        assert!(g.condition_margins.iter().all(|c| c.holds));

        let low = derive_geometry(
            &spec(
                "200*x1 + sin(x2)",
                2,
                100.0,
                PerturbationSpec::gaussian(0.0, 0.5),
            ),
            64,
        )
        .unwrap();
        assert!(!low.ok && low.threshold > 100.0);

        let flat = derive_geometry(
            &spec("x1", 2, 150.0, PerturbationSpec::gaussian(0.0, 0.5)),
            16,
        )
        .unwrap();
        assert!(!flat.ok);
        let first = flat.condition_margins.iter().find(|c| !c.holds).unwrap();
        assert!((first.margin - (1.0 - 1.1 * 1.1 * 150f64.powi(2))).abs() < 1e-6);
    }

    #[test]
    fn branch_indices() {
        assert_eq!(branch_index(0.0, 1.0), 0);
        assert_eq!(branch_index(3.4, 1.0), 2);
        assert_eq!(branch_index(-2.0, 1.0), -1);
        assert_eq!(branch_index(1.0, 1.0), 1);
    }

    #[test]
    fn maps() {
        let m = reference();
        assert_eq!(apply_t(&[0.0, 0.0], 0.0, &m).unwrap().0, vec![0.0, 0.0]);

        let lin = linear();
        let s = apply_s(&[0.01, 0.0], &lin).unwrap();
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 2.0 * gamma()).abs() < 1e-15);

        // S and T agree where the branch index is 0 and θ = 0
        let u = [0.003, 0.02];
        let (t, _) = apply_t(&u, 0.0, &lin).unwrap();
        assert_eq!(t, apply_s(&u, &lin).unwrap());
    }

    #[test]
    fn eigenvalues() {
        let d = ExpansionDiagnostics::from_parts(3.0, 0.0, 4.0, 1.0);
        assert_eq!((d.lam_minus, d.lam_plus), (4.0, 9.0));

        let m = reference();
        let d = gapkit_core::model::expansion_eigenvalues(&[0.3, 0.0], &m).unwrap();
        let (v1sq, w, g2): (f64, f64, f64) = (40000.0 / 165.0, 1.0, 165.0);
        let tr = g2 + v1sq + w;
        let disc = (tr * tr - 4.0 * v1sq * g2).sqrt();
        assert!((d.lam_minus - (tr - disc) / 2.0).abs() < 1e-9);
        assert!((d.lam_plus - (tr + disc) / 2.0).abs() < 1e-9);
        assert!((d.margin - ((tr - disc) / 2.0 - 150.0)).abs() < 1e-9);
    }

    #[test]
    fn boundary_spacing_of_linear_model() {
        let lin = linear();
        let sep = boundary_separation(&lin, 0.0, 16).unwrap();
        assert!(sep.ok);
        assert!((sep.lower_bound - gamma() / 100.0).abs() < 1e-12);
        assert!((sep.min_distance.unwrap() - 0.01).abs() < 1e-9);

        let narrow = model("0.4*x1", 2, 150.0, PerturbationSpec::fixed(0.0));
        let sep = boundary_separation(&narrow, 0.0, 16).unwrap();
        assert!(sep.ok && sep.min_distance.is_none());
    }
}

mod transfer_ops {
    use super::*;

    #[test]
    fn inverse_branch_of_linear_model() {
        let lin = linear();
        let y = [0.5, 0.01];
        let b = inverse_branch(&y, 5, 0.3, &lin).unwrap().unwrap();
        let u1 = (0.01 / gamma() - 0.3 + 10.0) / 200.0;
        assert!((b.preimage[0] - u1).abs() < 1e-12);
        assert!((b.preimage[1] - gamma() * 0.5).abs() < 1e-15);
        assert!((b.weight - 1.0 / 200.0).abs() < 1e-15);
        assert!((b.preimage[0] - 0.0491423).abs() < 1e-7);
        let (back, _) = apply_t(&b.preimage, 0.3, &lin).unwrap();
        assert!((back[0] - y[0]).abs() < 1e-10 && (back[1] - y[1]).abs() < 1e-10);

        assert!(inverse_branch(&y, 1_000_000, 0.3, &lin).unwrap().is_none());
    }

    #[test]
    fn branch_counts() {
        let lin = linear();
        assert_eq!(
            enumerate_branches(&[0.123, 0.0123], 0.0, &lin)
                .unwrap()
                .len(),
            200
        );
        let narrow = model("0.4*x1", 2, 150.0, PerturbationSpec::fixed(0.0));
        let b = enumerate_branches(&[0.1, 0.01], 0.0, &narrow).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].j, 0);
    }

    #[test]
    fn constants_are_fixed_by_full_branch_model() {
        let lin = linear();
        let one = |_: &[f64]| 1.0;
        let zero = |_: &[f64]| 0.0;
        for (y, theta) in [
            ([0.3, -0.02], 0.0),
            ([-0.7, 0.05], 0.41),
            ([0.99, -0.077], -1.3),
        ] {
            assert!((apply_transfer_theta(&one, &y, theta, &lin).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(apply_transfer_theta(&zero, &y, theta, &lin).unwrap(), 0.0);
            assert!((apply_transfer_averaged(&one, &y, &lin, 4).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lasota_yorke_small_radius_limit() {
        let m = reference();
        let ly = lasota_yorke_constants(&m, 1e-9).unwrap();
        let limit = eta0(150.0, 4, 2).unwrap();
        assert!(
            (ly.eta_bar - limit).abs() < 1e-5,
            "{} vs {limit}",
            ly.eta_bar
        );
        assert!(ly.eta < 1.0 && ly.d_const > 0.0);
    }
}

mod ulam_ops {
    use super::*;

    #[test]
    fn grid_shapes() {
        let m = reference();
        let g = build_grid(&m, &[64, 64]).unwrap();
        assert_eq!(g.total, 4096);
        assert!((g.box_size[0] - 1.0 / 32.0).abs() < 1e-15);
        assert!((g.box_size[1] - gamma() / 32.0).abs() < 1e-15);
        assert!((g.domain_volume() - 4.0 * gamma()).abs() < 1e-15);
        assert!(build_grid(&m, &[1, 64]).is_err());
    }

    #[test]
    fn two_state_and_identity_spectra() {
        let (a, b) = (0.3, 0.45);
        let m = StochasticMatrix::from_dense(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
        let h = [b / (a + b), a / (a + b)];
        let s = subdominant_modulus(&m, &h, &SubdominantOptions::default()).unwrap();
        assert!((s.modulus - (1.0 - a - b).abs()).abs() < 1e-10);

        let id = StochasticMatrix::identity(5);
        let s = subdominant_modulus(&id, &[0.2; 5], &SubdominantOptions::default()).unwrap();
        assert!((s.modulus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_is_exact() {
        let m = model("2*x1", 1, 3.0, PerturbationSpec::fixed(0.0));
        for n in [16usize, 64] {
            let grid = build_grid(&m, &[n]).unwrap();
            let matrix = assemble_ulam(&m, &grid, &AssemblyOptions::default()).unwrap();
            for i in 0..n {
                let (cols, vals) = matrix.row(i);
                let mut row: Vec<(usize, f64)> =
                    cols.iter().copied().zip(vals.iter().copied()).collect();
                row.sort_by_key(|e| e.0);
                let mut want = vec![((2 * i + n / 2) % n, 0.5), ((2 * i + n / 2 + 1) % n, 0.5)];
                want.sort_by_key(|e| e.0);
                assert_eq!(row, want, "row {i} of {n}");
            }
            let st = stationary_density(&matrix, &grid, &StationaryOptions::default()).unwrap();
            assert!(st.density.values.iter().all(|&v| v == 0.5));
            let s =
                subdominant_modulus(&matrix, &st.density.values, &SubdominantOptions::default())
                    .unwrap();
            assert!(s.modulus < 1e-12);
        }
    }

    #[test]
    fn linear_model_has_uniform_fixed_point() {
        let lin = linear();
        let grid = build_grid(&lin, &[16, 16]).unwrap();
        let matrix = assemble_ulam(&lin, &grid, &AssemblyOptions::default()).unwrap();
        assert!(matrix.row_sum_error() <= 1e-12);
        let p = vec![1.0 / grid.total as f64; grid.total];
        let mut out = vec![0.0; grid.total];
        matrix.left_mul(&p, &mut out);
        assert!(p.iter().zip(&out).all(|(a, b)| (a - b).abs() <= 1e-10));
        let st = stationary_density(&matrix, &grid, &StationaryOptions::default()).unwrap();
        let u = 1.0 / lin.omega_volume();
        assert!(st.density.values.iter().all(|v| (v - u).abs() <= 1e-8));
        assert!((st.density.integral() - 1.0).abs() < 1e-12);
    }
}

mod stats_ops {
    use super::*;

    #[test]
    fn uniform_marginals() {
        let lin = linear();
        let grid = build_grid(&lin, &[32, 16]).unwrap();
        let h = DensityGrid::uniform(grid);
        for axis in 1..=2 {
            let mg = marginal_density(&h, &lin, axis).unwrap();
            assert!(mg.density.iter().all(|d| (d - 0.5).abs() < 1e-12));
            assert!((mg.integral() - 1.0).abs() < 1e-12);
        }
        assert!(marginal_density(&h, &lin, 3).is_err());
    }

    #[test]
    fn linear_trajectory_is_uniform() {
        let lin = linear();
        let traj = simulate_process(&lin, &[0.1, 0.2], 1_000_000, 3).unwrap();
        assert!(traj.x.iter().all(|x| x.abs() <= 1.0));
        assert!(traj.max_embedding_error <= 1e-10);
        let grid = build_grid(&lin, &[64, 64]).unwrap();
        let mg = marginal_density(&DensityGrid::uniform(grid), &lin, 1).unwrap();
        assert!(empirical_vs_stationary(&traj, &mg, 1000).unwrap().l1 <= 0.05);
        let again = simulate_process(&lin, &[0.1, 0.2], 1_000_000, 3).unwrap();
        assert_eq!(traj.x, again.x);
    }

    #[test]
    fn zero_map_is_absorbing() {
        let m = model("0*x1", 2, 150.0, PerturbationSpec::fixed(0.0));
        let traj = simulate_process(&m, &[0.4, -0.7], 50, 1).unwrap();
        assert!(traj.x[2..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_observable_does_not_correlate() {
        let lin = linear();
        let grid = build_grid(&lin, &[8, 8]).unwrap();
        let matrix = assemble_ulam(&lin, &grid, &AssemblyOptions::default()).unwrap();
        let h = DensityGrid::uniform(grid.clone());
        let f = vec![2.0; grid.total];
        let g: Vec<f64> = (0..grid.total).map(|b| grid.center(b)[0].sin()).collect();
        let fit = correlation_decay(&matrix, &h, &f, &g, 10).unwrap();
        assert!(fit.covariances.iter().all(|c| c.abs() < 1e-14));
        assert!(fit.lambda.is_none());
    }

    #[test]
    fn seminorm_of_interval_indicator() {
        let grid = Grid::new(vec![2.0], vec![800], MAX_BOXES).unwrap();
        let values = (0..grid.total)
            .map(|b| {
                let c = grid.center(b)[0];
                if (0.0..1.0).contains(&c) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let f = DensityGrid::new(grid, values).unwrap();
        let est = osc_seminorm(&f, &[0.05, 0.1, 0.2]).unwrap();
        assert!((est.value - 4.0).abs() < 0.05 * 4.0, "{}", est.value);
        let zero = DensityGrid::constant(f.grid.clone(), 0.0);
        assert_eq!(osc_seminorm(&zero, &[0.1]).unwrap().value, 0.0);
    }
}
