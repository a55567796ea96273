//! End-to-end experiments on solved and oracle fields.

use greenlab_core::analysis::{
    extract_constants, fit_near_diagonal, gagliardo_seminorm, multi_annulus_harnack,
    robustness_sweep, Region, SweepMode, SweepProblem,
};
use greenlab_core::kernel::{make_kernel, Coefficient, KernelFamily, KernelSpec};
use greenlab_core::lattice::{build_grid, discretize, Backend, Shape};
use greenlab_core::oracle::{oracle_field, BallGreenParams};
use greenlab_core::solve::{green_pair, solve_point_source, GreenField, SolveConfig};
use std::sync::Arc;

const ORIGIN: [f64; 3] = [0.0; 3];

fn ball(radius: f64) -> Shape {
    Shape::Ball {
        center: vec![0.0; 3],
        radius,
    }
}

fn solve(spec: KernelSpec, shape: Shape, h: f64, rho: f64) -> GreenField {
    let k = make_kernel(spec).unwrap();
    let op = discretize(&k, shape, h, Backend::Auto).unwrap();
    solve_point_source(&op, &ORIGIN, rho, &SolveConfig::default()).unwrap()
}

fn oracle(alpha: f64, h: f64) -> GreenField {
    let grid = Arc::new(build_grid(ball(1.0), h, 3).unwrap());
    let values = oracle_field(&grid, &ORIGIN, &BallGreenParams::new(3, alpha).unwrap()).unwrap();
    GreenField::from_values(grid, values, ORIGIN.to_vec(), alpha)
}

#[test]
fn oracle_field_slope_on_the_near_diagonal_window() {
    let field = oracle(1.5, 0.05);
    let fit = fit_near_diagonal(
        &field,
        &ORIGIN,
        Region {
            r_min: 0.1,
            r_max: 0.4,
        },
    )
    .unwrap();
    assert!((fit.slope + 1.5).abs() <= 0.1, "{fit:?}");
    assert!(fit.n_points >= 8);
}

#[test]
fn solved_and_oracle_quasinorms_agree_within_factor_three() {
    let solved = solve(KernelSpec::alpha_stable(1.5, 3), ball(1.0), 0.1, 0.2);
    let exact = oracle(1.5, 0.1);
    let a = extract_constants(&solved, &ORIGIN).unwrap();
    let b = extract_constants(&exact, &ORIGIN).unwrap();
    let ratio = a.quasinorm / b.quasinorm;
    assert!(
        (1.0 / 3.0..=3.0).contains(&ratio),
        "{} {}",
        a.quasinorm,
        b.quasinorm
    );
    assert!(a.c_lower > 0.0 && a.c_lower <= a.c_upper && a.harnack_ratio >= 1.0);
}

#[test]
fn green_function_grows_with_the_domain() {
    let h = 0.1;
    let spec = KernelSpec::alpha_stable(1.5, 3);
    let small = solve(spec.clone(), ball(0.8), h, 0.2);
    let large = solve(spec, ball(1.0), h, 0.2);
    let gmax = large.max();
    for i in 0..small.grid.len() {
        let j = large.grid.index_of(small.grid.cell(i)).unwrap();
        assert!(large.values[j] >= small.values[i] - 1e-8 * gmax, "node {i}");
    }
    let (rs, rl) = (
        extract_constants(&small, &ORIGIN).unwrap(),
        extract_constants(&large, &ORIGIN).unwrap(),
    );
    assert!(rl.quasinorm >= rs.quasinorm);
}

#[test]
fn seminorm_is_stable_in_the_source_radius() {
    let h = 0.1;
    let spec = KernelSpec::alpha_stable(1.5, 3);
    let g2 = solve(spec.clone(), ball(1.0), h, 2.0 * h);
    let g4 = solve(spec, ball(1.0), h, 4.0 * h);
    let a = gagliardo_seminorm(&g2, 0.5, 1.2, 0.2).unwrap();
    let b = gagliardo_seminorm(&g4, 0.5, 1.2, 0.2).unwrap();
    assert!((a / b - 1.0).abs() <= 0.3, "{a} {b}");
}

#[test]
fn nested_annuli_ratios_are_ordered_on_solved_fields() {
    let g = solve(KernelSpec::alpha_stable(1.5, 3), ball(1.0), 0.1, 0.2);
    let a = multi_annulus_harnack(&g, &ORIGIN, 2.5, Some(0.2)).unwrap();
    let b = multi_annulus_harnack(&g, &ORIGIN, 4.0, Some(0.2)).unwrap();
    assert!(b.ratio >= a.ratio && a.ratio >= 1.0);
    assert!(b.ratio <= b.chain_prediction, "{b:?}");
}

#[test]
fn oracle_sweep_tracks_the_limit_constant() {
    let p = SweepProblem::unit_ball(3, 0.02, SweepMode::Oracle);
    let s = robustness_sweep(&p, &[1.2, 1.5, 1.8, 1.95], &SolveConfig::default()).unwrap();
    for (r, c) in s.reports.iter().zip(&s.limit_constants) {
        assert!(
            (r.c_upper / c - 1.0).abs() <= 0.1,
            "alpha {}: {} vs {c}",
            r.alpha,
            r.c_upper
        );
    }
}

#[test]
fn local_boundedness_constants_are_finite_across_a_sweep() {
    let p = SweepProblem::unit_ball(3, 0.1, SweepMode::Solve);
    let s = robustness_sweep(&p, &[1.2, 1.8], &SolveConfig::default()).unwrap();
    assert!(s
        .local_bound_constants
        .iter()
        .all(|c| c.is_finite() && *c >= 1.0));
    assert_eq!(s.reports.len(), 2);
}

#[test]
fn bounded_coefficient_field_is_positive_and_symmetric() {
    let spec = KernelSpec::new(
        KernelFamily::BoundedCoeff {
            coefficient: Coefficient::Oscillating {
                lambda: 2.0,
                frequency: 3.0,
            },
        },
        1.5,
        3,
    );
    let k = make_kernel(spec).unwrap();
    let op = discretize(&k, ball(1.0), 0.2, Backend::Auto).unwrap();
    let cfg = SolveConfig::default();
    let g = solve_point_source(&op, &ORIGIN, 0.2, &cfg).unwrap();
    assert!(g.min() > 0.0);
    let (a, b) = green_pair(&op, &[0.2, 0.0, 0.0], &[-0.2, 0.4, 0.0], 0.2, &cfg).unwrap();
    assert!((a - b).abs() <= 1e-8 * a.max(b), "{a} {b}");
}
