//! Property-based invariants across kernels, lattice, solver, oracle and analysis.

use greenlab_core::analysis::{extract_constants, fit_near_diagonal, weak_quasinorm, Region};
use greenlab_core::kernel::{make_kernel, KernelSpec};
use greenlab_core::lattice::{build_grid, discretize, Backend, Shape};
use greenlab_core::oracle::{bgr_ball_green, BallGreenParams};
use greenlab_core::solve::{
    regularized_rhs, solve_green, solve_point_source, GreenField, SolveConfig,
};
use proptest::prelude::*;
use std::sync::Arc;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn point_in_ball(r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3).prop_filter_map("inside", move |v| {
        let n = dot(&v, &v).sqrt();
        (n < 1.0).then(|| v.iter().map(|c| c * r).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_is_symmetric_and_positive(alpha in 0.2f64..1.99, x in point_in_ball(1.0), y in point_in_ball(1.0)) {
        prop_assume!(x != y);
        let k = make_kernel(KernelSpec::alpha_stable(alpha, 3)).unwrap();
        let a = k.eval(&x, &y).unwrap();
        let b = k.eval(&y, &x).unwrap();
        prop_assert!(a > 0.0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn oracle_is_symmetric(alpha in 0.5f64..1.99, x in point_in_ball(0.9), y in point_in_ball(0.9)) {
        let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assume!(d2 > 1e-4);
        let p = BallGreenParams::new(3, alpha).unwrap();
        let a = bgr_ball_green(&x, &y, &p).unwrap();
        let b = bgr_ball_green(&y, &x, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        prop_assert!(a > 0.0);
    }

    #[test]
    fn source_has_unit_mass(y0 in point_in_ball(0.5), factor in 1.0f64..4.0) {
        let h = 0.1;
        let grid = build_grid(Shape::unit_ball(3), h, 3).unwrap();
        let rhs = regularized_rhs(&grid, &y0, factor * h).unwrap();
        prop_assert!((rhs.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        prop_assert!(rhs.iter().all(|v| *v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn operator_is_symmetric_and_positive_definite(alpha in 1.0f64..1.99, seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let k = make_kernel(KernelSpec::alpha_stable(alpha, 3)).unwrap();
        let op = discretize(&k, Shape::unit_ball(3), 0.25, Backend::Auto).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = op.len();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let au = op.apply(&u).unwrap();
        let l = dot(&au, &v);
        let r = dot(&u, &op.apply(&v).unwrap());
        prop_assert!((l - r).abs() <= 1e-12 * dot(&au, &au).sqrt() * dot(&v, &v).sqrt());
        prop_assert!(dot(&au, &u) > 0.0);
    }

    #[test]
    fn solves_are_linear_and_nonnegative(alpha in 1.0f64..1.99, w in 0.1f64..10.0) {
        let k = make_kernel(KernelSpec::alpha_stable(alpha, 3)).unwrap();
        let op = discretize(&k, Shape::unit_ball(3), 0.25, Backend::Auto).unwrap();
        let cfg = SolveConfig::default();
        let f1 = regularized_rhs(&op.grid, &[0.25, 0.0, 0.0], 0.25).unwrap();
        let f2 = regularized_rhs(&op.grid, &[-0.25, 0.25, 0.0], 0.25).unwrap();
        let g1 = solve_green(&op, &f1, &cfg).unwrap();
        let g2 = solve_green(&op, &f2, &cfg).unwrap();
        let mix: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a + w * b).collect();
        let g = solve_green(&op, &mix, &cfg).unwrap();
        let scale = g.max();
        for i in 0..op.len() {
            prop_assert!((g.values[i] - g1.values[i] - w * g2.values[i]).abs() <= 1e-8 * scale);
        }
        prop_assert!(g.min() >= -10.0 * cfg.tol * scale);
    }
}

fn reference_field() -> &'static GreenField {
    use std::sync::OnceLock;
    static FIELD: OnceLock<GreenField> = OnceLock::new();
    FIELD.get_or_init(|| {
        let k = make_kernel(KernelSpec::alpha_stable(1.5, 3)).unwrap();
        let op = discretize(&k, Shape::unit_ball(3), 0.1, Backend::Auto).unwrap();
        solve_point_source(&op, &[0.0; 3], 0.2, &SolveConfig::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constants_scale_with_the_field(lambda in 1e-3f64..1e3) {
        let base = reference_field();
        let scaled = GreenField::from_values(
            Arc::clone(&base.grid),
            base.values.iter().map(|v| v * lambda).collect(),
            base.y0.clone(),
            base.alpha,
        );
        let a = extract_constants(base, &[0.0; 3]).unwrap();
        let b = extract_constants(&scaled, &[0.0; 3]).unwrap();
        let want = a.scaled(lambda);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-10 * x.abs().max(y.abs());
        prop_assert!(close(b.c_upper, want.c_upper));
        prop_assert!(close(b.c_lower, want.c_lower));
        prop_assert!(close(b.quasinorm, want.quasinorm));
        prop_assert!(close(b.harnack_ratio, a.harnack_ratio));
        prop_assert!((b.fit.slope - a.fit.slope).abs() <= 1e-6);
    }

    #[test]
    fn quasinorm_is_bounded_by_the_sup_norm(values in prop::collection::vec(0f64..10.0, 1..400), h in 0.01f64..0.5, alpha in 0.5f64..1.99) {
        let exponent = (3.0 - alpha) / 3.0;
        let cell = h * h * h;
        let q = weak_quasinorm(&values, cell, exponent);
        let max = values.iter().cloned().fold(0.0, f64::max);
        prop_assert!(q <= max * (cell * values.len() as f64).powf(exponent) * (1.0 + 1e-12));
    }

    #[test]
    fn fit_recovers_synthetic_exponents(alpha in 0.5f64..1.99, amplitude in 0.1f64..10.0) {
        let field = reference_field();
        let values = field
            .grid
            .points()
            .iter()
            .map(|p| {
                let r = dot(p, p).sqrt();
                if r == 0.0 { 1.0 } else { amplitude * r.powf(alpha - 3.0) }
            })
            .collect();
        let g = GreenField::from_values(Arc::clone(&field.grid), values, vec![0.0; 3], alpha);
        let fit = fit_near_diagonal(&g, &[0.0; 3], Region { r_min: 0.2, r_max: 0.5 }).unwrap();
        prop_assert!((fit.slope - (alpha - 3.0)).abs() < 1e-6);
        prop_assert!((fit.raw_slope - (alpha - 3.0)).abs() < 1e-10);
    }
}
