//! End-to-end acceptance suite. Runs without the libtest harness so that every
//! criterion prints its own PASS/FAIL line; the process fails on any
//! unexpected failure.

use greenlab_core::analysis::{
    fit_near_diagonal, multi_annulus_harnack, robustness_sweep, shell_means, Region, SweepMode,
    SweepProblem,
};
use greenlab_core::inequalities::run_suite;
use greenlab_core::kernel::{make_kernel, KernelSpec};
use greenlab_core::lattice::{
    build_grid, discrete_comparability, discretize, Backend, NonlocalOperator, Shape,
};
use greenlab_core::oracle::{bgr_ball_green, near_diagonal_constant, BallGreenParams};
use greenlab_core::solve::{green_pair, solve_green, solve_point_source, GreenField, SolveConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

type Outcome = Result<(bool, String), String>;

const H: f64 = 0.1;
const RHO: f64 = 0.2;
const ORIGIN: [f64; 3] = [0.0; 3];

fn stable_ball(alpha: f64, h: f64) -> Result<NonlocalOperator, String> {
    let k = make_kernel(KernelSpec::alpha_stable(alpha, 3)).map_err(|e| e.to_string())?;
    discretize(&k, Shape::unit_ball(3), h, Backend::Auto).map_err(|e| e.to_string())
}

fn solved(spec: KernelSpec) -> Result<GreenField, String> {
    let k = make_kernel(spec).map_err(|e| e.to_string())?;
    let op = discretize(&k, Shape::unit_ball(3), H, Backend::Auto).map_err(|e| e.to_string())?;
    solve_point_source(&op, &ORIGIN, RHO, &SolveConfig::default()).map_err(|e| e.to_string())
}

fn within(t: Instant, limit: Duration) -> (bool, String) {
    let e = t.elapsed();
    (
        e <= limit,
        format!("{:.2}s of {:.0}s", e.as_secs_f64(), limit.as_secs_f64()),
    )
}

fn limit_constant() -> Outcome {
    let t = Instant::now();
    let target = 1.0 / (4.0 * PI);
    let v: Vec<f64> = [1.9, 1.99, 1.999]
        .iter()
        .map(|a| near_diagonal_constant(3, *a))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let gaps: Vec<f64> = v.iter().map(|x| (x - target).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]) && v.windows(2).all(|w| w[1] > w[0]);
    let (fast, time) = within(t, Duration::from_secs(1));
    Ok((
        monotone && gaps[2] <= 1e-3 && fast,
        format!(
            "values {:.6?}, |v(1.999) - 1/4π| = {:.2e}, {time}",
            v, gaps[2]
        ),
    ))
}

fn oracle_near_diagonal() -> Outcome {
    let t = Instant::now();
    let r = 1e-3;
    let mut worst = 0.0f64;
    for alpha in [1.2, 1.5, 1.8, 1.999] {
        let p = BallGreenParams::new(3, alpha).map_err(|e| e.to_string())?;
        let g = bgr_ball_green(&ORIGIN, &[r, 0.0, 0.0], &p).map_err(|e| e.to_string())?;
        let c = near_diagonal_constant(3, alpha).map_err(|e| e.to_string())?;
        worst = worst.max((g / r.powf(alpha - 3.0) / c - 1.0).abs());
    }
    let (fast, time) = within(t, Duration::from_secs(1));
    Ok((
        worst <= 0.01 && fast,
        format!("worst relative deviation {worst:.2e}, {time}"),
    ))
}

fn solver_vs_oracle() -> Outcome {
    let t = Instant::now();
    let field = solved(KernelSpec::alpha_stable(1.5, 3))?;
    let p = BallGreenParams::new(3, 1.5).map_err(|e| e.to_string())?;
    let region = Region {
        r_min: 0.2,
        r_max: 0.5,
    };
    let oracle_values: Vec<f64> = field
        .grid
        .points()
        .iter()
        // the source node lies outside the comparison shells
        .map(|x| {
            if x.iter().all(|v| *v == 0.0) {
                Ok(0.0)
            } else {
                bgr_ball_green(x, &ORIGIN, &p)
            }
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let oracle = GreenField::from_values(field.grid.clone(), oracle_values, ORIGIN.to_vec(), 1.5);
    let solved_shells = shell_means(&field, &ORIGIN, region);
    let oracle_shells = shell_means(&oracle, &ORIGIN, region);
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (s, o) in solved_shells.iter().zip(&oracle_shells) {
        let e = (s.1 / o.1 - 1.0).abs();
        if e > worst {
            worst = e;
            at = s.0;
        }
    }
    let (fast, time) = within(t, Duration::from_secs(300));
    Ok((
        worst <= 0.15 && fast,
        format!(
            "{} shells, worst relative error {worst:.4} at r = {at:.4}, {time}",
            solved_shells.len()
        ),
    ))
}

fn exponent_fit() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for alpha in [1.2, 1.5, 1.8] {
        let field = solved(KernelSpec::alpha_stable(alpha, 3))?;
        let fit = fit_near_diagonal(
            &field,
            &ORIGIN,
            Region {
                r_min: 2.0 * H,
                r_max: 0.5,
            },
        )
        .map_err(|e| e.to_string())?;
        let err = (fit.slope - (alpha - 3.0)).abs();
        ok &= err <= 0.15;
        lines.push(format!(
            "α={alpha}: slope {:.4} (target {:.1})",
            fit.slope,
            alpha - 3.0
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn robustness() -> Outcome {
    let problem = SweepProblem::unit_ball(3, H, SweepMode::Solve);
    let s = robustness_sweep(&problem, &[1.2, 1.5, 1.8, 1.95], &SolveConfig::default())
        .map_err(|e| e.to_string())?;
    Ok((
        s.spread_upper <= 5.0 && s.spread_lower <= 5.0 && s.quasinorm_spread <= 3.0,
        format!(
            "spread_upper {:.3}, spread_lower {:.3}, quasinorm spread {:.3}",
            s.spread_upper, s.spread_lower, s.quasinorm_spread
        ),
    ))
}

fn random_point(rng: &mut ChaCha8Rng, radius: f64) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-radius..radius)).collect();
        if p.iter().map(|v| v * v).sum::<f64>() < radius * radius {
            return p;
        }
    }
}

fn symmetry() -> Outcome {
    let tol = 1e-10;
    let cfg = SolveConfig {
        tol,
        ..SolveConfig::default()
    };
    let op = stable_ball(1.5, H)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let x = random_point(&mut rng, 0.7);
        let y = random_point(&mut rng, 0.7);
        let (a, b) = green_pair(&op, &x, &y, RHO, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((a - b).abs() / (10.0 * tol * a.abs().max(b.abs())));
    }
    Ok((
        worst <= 1.0,
        format!("worst gap / (10·tol·max) = {worst:.3}"),
    ))
}

fn cone_kernel() -> Outcome {
    let alpha = 1.5;
    let mut details = Vec::new();
    let mut ok = true;
    let iso = solved(KernelSpec::alpha_stable(alpha, 3))?;
    let iso_ratio = multi_annulus_harnack(&iso, &ORIGIN, 4.0, None)
        .map_err(|e| e.to_string())?
        .ratio;
    for aperture in [0.5, 0.9] {
        let spec = KernelSpec::cone(alpha, 3, aperture);
        let k = make_kernel(spec.clone()).map_err(|e| e.to_string())?;
        let off = k
            .eval(&ORIGIN, &[1.0, 0.0, 0.0])
            .map_err(|e| e.to_string())?;
        let on = k
            .eval(&ORIGIN, &[0.0, 0.0, 1.0])
            .map_err(|e| e.to_string())?;
        let exact = off == 0.0 && on == 2.0 - alpha;
        let field = solved(spec)?;
        let fit = fit_near_diagonal(
            &field,
            &ORIGIN,
            Region {
                r_min: 2.0 * H,
                r_max: 0.5,
            },
        )
        .map_err(|e| e.to_string())?;
        let ratio = multi_annulus_harnack(&field, &ORIGIN, 4.0, None)
            .map_err(|e| e.to_string())?
            .ratio;
        let factor = (ratio / iso_ratio).max(iso_ratio / ratio);
        let pass = exact
            && (fit.slope - (alpha - 3.0)).abs() <= 0.25
            && ratio.is_finite()
            && factor <= 10.0;
        ok &= pass;
        details.push(format!(
            "c={aperture}: eval {off}/{on}, slope {:.4}, Harnack(M=4) {ratio:.2} vs isotropic {iso_ratio:.2}",
            fit.slope
        ));
    }
    Ok((ok, details.join("; ")))
}

/// Stated-constant predicates are false (a = 0, b = 1, s = 0.5 already
/// violates the power bound); reported, but excluded from the exit status.
const KNOWN_FALSE: [&str; 2] = ["power-upper", "composite"];

fn inequality_suite() -> Outcome {
    let t = Instant::now();
    let rows = run_suite(20240601, 100_000);
    let (fast, time) = within(t, Duration::from_secs(10));
    let failed: Vec<String> = rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| {
            format!(
                "{} ({} violations, worst deficit {:.3e})",
                r.lemma, r.violations, r.worst_deficit
            )
        })
        .collect();
    let clean: Vec<&str> = rows
        .iter()
        .filter(|r| r.passed())
        .map(|r| r.lemma)
        .collect();
    Ok((
        failed.is_empty() && fast,
        format!(
            "holding: {}; violated: {}; {time}",
            clean.join(", "),
            if failed.is_empty() {
                "none".into()
            } else {
                failed.join(", ")
            }
        ),
    ))
}

fn operator_invariants() -> Outcome {
    let op = stable_ball(1.5, H)?;
    let n = op.len();
    let a1 = op.apply(&vec![1.0; n]).map_err(|e| e.to_string())?;
    let kill = op.killing();
    let ones = a1
        .iter()
        .zip(&kill)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut sym = 0.0f64;
    for _ in 0..10 {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let au = op.apply(&u).map_err(|e| e.to_string())?;
        let av = op.apply(&v).map_err(|e| e.to_string())?;
        let l: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        let r: f64 = u.iter().zip(&av).map(|(a, b)| a * b).sum();
        let scale: f64 = au.iter().zip(&v).map(|(a, b)| (a * b).abs()).sum();
        sym = sym.max((l - r).abs() / scale);
    }
    let cfg = SolveConfig::default();
    let mut min_ratio = f64::INFINITY;
    for _ in 0..20 {
        let f: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    rng.gen_range(0.0..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        let g = solve_green(&op, &f, &cfg).map_err(|e| e.to_string())?;
        min_ratio = min_ratio.min(g.min() / g.max());
    }
    let consistency = gaussian_consistency()?;
    let pass = ones <= 1e-13 && sym <= 1e-13 && min_ratio >= -10.0 * cfg.tol && consistency <= 0.10;
    Ok((
        pass,
        format!(
            "A·1 vs κ {ones:.1e}, symmetry {sym:.1e}, min g/max g over 20 rhs {min_ratio:.2e}, Gaussian error {consistency:.4}"
        ),
    ))
}

/// Sup-norm error of `A u` against `-Δu` for a narrow Gaussian at `α = 1.99`,
/// relative to `sup |Δu|`.
fn gaussian_consistency() -> Result<f64, String> {
    let sigma = 0.2;
    let op = stable_ball(1.99, 0.05)?;
    let pts = op.grid.points();
    let u: Vec<f64> = pts
        .iter()
        .map(|p| (-p.iter().map(|v| v * v).sum::<f64>() / (sigma * sigma)).exp())
        .collect();
    let au = op.apply(&u).map_err(|e| e.to_string())?;
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for (i, p) in pts.iter().enumerate() {
        let r2: f64 = p.iter().map(|v| v * v).sum();
        // -Δ e^{-r²/σ²} = (2d/σ² - 4r²/σ⁴) e^{-r²/σ²}
        let lap = (6.0 / (sigma * sigma) - 4.0 * r2 / sigma.powi(4)) * u[i];
        scale = scale.max(lap.abs());
        if r2 <= 0.25 {
            err = err.max((au[i] - lap).abs());
        }
    }
    Ok(err / scale)
}

fn comparability_certificate() -> Outcome {
    let t = Instant::now();
    let h = 0.25;
    let grid = build_grid(Shape::unit_ball(3), h, 3).map_err(|e| e.to_string())?;
    // nodes per axis of the interior lattice
    let span: Vec<usize> = (0..3)
        .map(|k| {
            let mut c: Vec<i64> = (0..grid.len()).map(|i| grid.cell(i)[k]).collect();
            c.sort();
            c.dedup();
            c.len()
        })
        .collect();
    let reference = stable_ball(1.5, h)?;
    let mut details = vec![format!("{} nodes on a {:?} lattice", grid.len(), span)];
    let mut ok = span == [7, 7, 7];
    for aperture in [0.5, 0.9] {
        let k = make_kernel(KernelSpec::cone(1.5, 3, aperture)).map_err(|e| e.to_string())?;
        let op =
            discretize(&k, Shape::unit_ball(3), h, Backend::Dense).map_err(|e| e.to_string())?;
        let c = discrete_comparability(&op, &reference).map_err(|e| e.to_string())?;
        ok &= c > 0.0;
        details.push(format!("c={aperture}: λ_min = {c:.4e}"));
    }
    let (fast, time) = within(t, Duration::from_secs(120));
    details.push(time);
    Ok((ok && fast, details.join(", ")))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("limit constant converges to 1/(4π)", limit_constant),
        (
            "ball oracle matches the diagonal constant",
            oracle_near_diagonal,
        ),
        ("solved field matches the ball oracle", solver_vs_oracle),
        ("near-diagonal exponent", exponent_fit),
        ("robustness sweep spreads", robustness),
        ("symmetry of the Green function", symmetry),
        ("cone kernel", cone_kernel),
        ("inequality suite", inequality_suite),
        ("operator invariants", operator_invariants),
        (
            "discrete comparability certificate",
            comparability_certificate,
        ),
    ];
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let (passed, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}  {name}: {detail}", i + 1);
        if !passed {
            let known = i + 1 == 8 && known_false_only();
            if known {
                println!("             known: only the stated-constant predicates {KNOWN_FALSE:?} are violated");
            } else {
                unexpected += 1;
            }
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}

fn known_false_only() -> bool {
    run_suite(20240601, 100_000)
        .iter()
        .filter(|r| !r.passed())
        .all(|r| KNOWN_FALSE.contains(&r.lemma))
}
