use super::{KernelFamily, KernelInstance};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    U1,
    U2,
    UJS,
    Levy,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::U1 => "U1",
            Condition::U2 => "U2",
            Condition::UJS => "UJS",
            Condition::Levy => "Levy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub estimated_constant: f64,
    pub samples_used: usize,
    pub worst_witness: Witness,
    pub budget: Option<f64>,
    /// `estimated_constant ≤ budget`; vacuously true without a budget.
    pub passed: bool,
}

/// Sample points for the condition checkers.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    /// Base points `x` for U1, UJS and the Lévy integral.
    pub points: Vec<Vec<f64>>,
    /// Radii `r` for U1.
    pub radii: Vec<f64>,
    /// Pairs `(x, y)` for U2 and UJS.
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    /// UJS ball radii as fractions of `|x-y|`, each in `(0, ½]`.
    pub ujs_fractions: Vec<f64>,
    /// Points per axis of the cube grid used to average over `B_r(x)`.
    pub ball_grid: usize,
    pub budget: Option<f64>,
}

impl SamplingPlan {
    /// 32 log-spaced radii on `[r_min, r_max]`, `n_points` seeded points in
    /// `[-R, R]^d` with `R = r_max/2`, and as many pairs.
    pub fn log_spaced(dim: usize, r_min: f64, r_max: f64, n_points: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 * r_max;
        let point = |rng: &mut ChaCha8Rng| {
            (0..dim)
                .map(|_| rng.gen_range(-half..half))
                .collect::<Vec<f64>>()
        };
        let points: Vec<Vec<f64>> = (0..n_points).map(|_| point(&mut rng)).collect();
        let n_r = 32;
        let radii = (0..n_r)
            .map(|i| r_min * (r_max / r_min).powf(i as f64 / (n_r - 1) as f64))
            .collect();
        let pairs = points
            .iter()
            .map(|x| {
                let dist = r_min * (r_max / r_min).powf(rng.gen::<f64>());
                let dir = unit_vector(dim, &mut rng);
                let y = x.iter().zip(&dir).map(|(a, b)| a + dist * b).collect();
                (x.clone(), y)
            })
            .collect();
        SamplingPlan {
            points,
            radii,
            pairs,
            ujs_fractions: vec![0.5, 0.25],
            ball_grid: 16,
            budget: None,
        }
    }

    /// The default plan: radii over `[h, diam]`, 64 points.
    pub fn default_for(dim: usize, h: f64, diam: f64, seed: u64) -> Self {
        Self::log_spaced(dim, h, diam, 64, seed)
    }

    pub fn with_budget(mut self, budget: Option<f64>) -> Self {
        self.budget = budget;
        self
    }
}

fn unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|a| a / n).collect();
        }
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Sampled supremum certificate for one kernel condition.
pub fn check_condition(
    k: &KernelInstance,
    which: Condition,
    plan: &SamplingPlan,
) -> Result<ConditionReport> {
    if matches!(k.family(), KernelFamily::Corner { .. })
        && matches!(which, Condition::U2 | Condition::UJS)
    {
        return Err(Error::domain(
            "bound checks are disabled for the corner kernel",
        ));
    }
    let alpha = k.alpha();
    let d = k.dim() as f64;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = Witness {
        x: Vec::new(),
        r: 0.0,
    };
    let mut samples = 0usize;
    let mut record = |v: f64, x: &[f64], r: f64, samples: &mut usize| {
        *samples += 1;
        if v > worst || witness.x.is_empty() {
            worst = v;
            witness = Witness { x: x.to_vec(), r };
        }
    };
    match which {
        Condition::U1 => {
            if plan.points.is_empty() || plan.radii.is_empty() {
                return Err(Error::config("U1 needs sample points and radii"));
            }
            let xs: &[Vec<f64>] = if k.is_translation_invariant {
                &plan.points[..1]
            } else {
                &plan.points
            };
            for x in xs {
                for &r in &plan.radii {
                    let inner = k.radial_power_integral(x, 2.0, 0.0, r)?;
                    let outer = k.radial_power_integral(x, 0.0, r, f64::INFINITY)?;
                    record(
                        r.powf(alpha - 2.0) * (inner + r * r * outer),
                        x,
                        r,
                        &mut samples,
                    );
                }
            }
            if k.is_translation_invariant {
                samples *= plan.points.len();
            }
        }
        Condition::Levy => {
            if plan.points.is_empty() {
                return Err(Error::config("Lévy check needs sample points"));
            }
            let xs: &[Vec<f64>] = if k.is_translation_invariant {
                &plan.points[..1]
            } else {
                &plan.points
            };
            for x in xs {
                let inner = k.radial_power_integral(x, 2.0, 0.0, 1.0)?;
                let outer = k.radial_power_integral(x, 0.0, 1.0, f64::INFINITY)?;
                record(inner + outer, x, 1.0, &mut samples);
            }
        }
        Condition::U2 => {
            if plan.pairs.is_empty() {
                return Err(Error::config("U2 needs sample pairs"));
            }
            for (x, y) in &plan.pairs {
                let r = dist(x, y);
                let v = k.eval(x, y)? * r.powf(d + alpha) / (2.0 - alpha);
                record(v, x, r, &mut samples);
            }
        }
        Condition::UJS => {
            if plan.pairs.is_empty() || plan.ujs_fractions.is_empty() {
                return Err(Error::config("UJS needs sample pairs and ball fractions"));
            }
            for (x, y) in &plan.pairs {
                let r_xy = dist(x, y);
                let kxy = k.eval(x, y)?;
                for &f in &plan.ujs_fractions {
                    if !(f > 0.0 && f <= 0.5) {
                        return Err(Error::config(format!("UJS fraction {f} outside (0, 1/2]")));
                    }
                    let r = f * r_xy;
                    let avg = ball_average(k, x, y, r, plan.ball_grid)?;
                    let v = if kxy == 0.0 {
                        0.0
                    } else if avg > 0.0 {
                        kxy / avg
                    } else {
                        f64::INFINITY
                    };
                    record(v, x, r, &mut samples);
                }
            }
        }
    }
    let estimated_constant = worst.max(0.0);
    let passed = plan.budget.is_none_or(|b| estimated_constant <= b);
    Ok(ConditionReport {
        condition: which,
        estimated_constant,
        samples_used: samples,
        worst_witness: witness,
        budget: plan.budget,
        passed,
    })
}

/// `⨍_{B_r(x)} k(z, y) dz` on the cube grid with `m` points per axis.
fn ball_average(k: &KernelInstance, x: &[f64], y: &[f64], r: f64, m: usize) -> Result<f64> {
    let dim = x.len();
    let step = 2.0 * r / m as f64;
    let mut idx = vec![0usize; dim];
    let mut z = vec![0.0; dim];
    let (mut sum, mut count) = (0.0, 0usize);
    loop {
        let mut r2 = 0.0;
        for i in 0..dim {
            let off = -r + (idx[i] as f64 + 0.5) * step;
            z[i] = x[i] + off;
            r2 += off * off;
        }
        if r2 < r * r {
            sum += k.eval(&z, y)?;
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == dim {
                return Ok(if count == 0 { 0.0 } else { sum / count as f64 });
            }
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Monte Carlo estimate of `|{y ∈ B_R(x) : k(x,y) ≥ λ(2-α)|y-x|^{-d-α}}| / |B_R|`.
pub fn level_set_fraction(
    k: &KernelInstance,
    x: &[f64],
    radius: f64,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::config(
            "level-set fraction needs at least one sample",
        ));
    }
    let dim = k.dim();
    let alpha = k.alpha();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut y = vec![0.0; dim];
    let mut taken = 0usize;
    while taken < samples {
        let mut r2 = 0.0;
        for i in 0..dim {
            let off = rng.gen_range(-radius..radius);
            y[i] = x[i] + off;
            r2 += off * off;
        }
        if r2 >= radius * radius || r2 == 0.0 {
            continue;
        }
        taken += 1;
        let r2: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        let threshold = lambda * (2.0 - alpha) * r2.powf(-0.5 * (dim as f64 + alpha));
        if k.eval(x, &y)? >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{make_kernel, stable_constant, KernelSpec};
    use crate::special::{cap_fraction, sphere_area};
    use std::f64::consts::PI;

    #[test]
    fn stable_u1_constant_is_eight_over_pi() {
        let k = make_kernel(KernelSpec::alpha_stable(1.0, 3)).unwrap();
        let plan = SamplingPlan::default_for(3, 0.1, 2.0, 1);
        let rep = check_condition(&k, Condition::U1, &plan).unwrap();
        assert!(
            (rep.estimated_constant - 8.0 / PI).abs() < 1e-10,
            "{}",
            rep.estimated_constant
        );
        assert!(rep.passed);
    }

    #[test]
    fn stable_u2_constant_is_normalisation_ratio() {
        let k = make_kernel(KernelSpec::alpha_stable(1.3, 3)).unwrap();
        let plan = SamplingPlan::default_for(3, 0.1, 2.0, 2);
        let rep = check_condition(&k, Condition::U2, &plan).unwrap();
        let c = stable_constant(3, 1.3).unwrap() / 0.7;
        assert!((rep.estimated_constant - c).abs() < 1e-12 * c);
    }

    #[test]
    fn cone_ujs_on_axis_is_below_brute_force_budget() {
        let k = make_kernel(KernelSpec::cone(1.5, 3, 0.9)).unwrap();
        let x = vec![0.0, 0.0, 0.0];
        let y = vec![0.0, 0.0, 1.0];
        // brute-force oracle: 10³ cube grid over B_{1/2}(x)
        let r = 0.5;
        let (mut sum, mut n) = (0.0, 0);
        for i in 0..10 {
            for j in 0..10 {
                for l in 0..10 {
                    let z = [
                        -r + (i as f64 + 0.5) * 0.1,
                        -r + (j as f64 + 0.5) * 0.1,
                        -r + (l as f64 + 0.5) * 0.1,
                    ];
                    if z.iter().map(|v| v * v).sum::<f64>() < r * r {
                        sum += k.eval(&z, &y).unwrap();
                        n += 1;
                    }
                }
            }
        }
        let oracle = k.eval(&x, &y).unwrap() / (sum / n as f64);
        let plan = SamplingPlan {
            points: vec![x.clone()],
            radii: vec![r],
            pairs: vec![(x, y)],
            ujs_fractions: vec![0.5],
            ball_grid: 16,
            budget: Some(1.5 * oracle),
        };
        let rep = check_condition(&k, Condition::UJS, &plan).unwrap();
        assert!(rep.estimated_constant.is_finite() && rep.estimated_constant > 0.0);
        assert!(rep.passed, "{} vs oracle {oracle}", rep.estimated_constant);
    }

    #[test]
    fn u2_implies_u1() {
        for (spec, a0) in [
            (KernelSpec::alpha_stable(1.4, 3), 1.4),
            (KernelSpec::cone(1.7, 3, 0.5), 1.7),
            (
                KernelSpec::new(
                    KernelFamily::AnnulusUnion {
                        ratio: 2.0,
                        ball_fraction: 0.4,
                    },
                    1.2,
                    3,
                ),
                1.2,
            ),
        ] {
            let k = make_kernel(spec).unwrap();
            let plan = SamplingPlan::log_spaced(3, 0.05, 2.0, 8, 3);
            let u1 = check_condition(&k, Condition::U1, &plan)
                .unwrap()
                .estimated_constant;
            // the pointwise sup of a homogeneous kernel is its normalisation
            let ck = k.normalization / (2.0 - k.alpha());
            assert!(u1 <= 2.0 * sphere_area(3) / a0 * ck * (1.0 + 1e-9), "{u1}");
        }
    }

    #[test]
    fn cone_level_set_fraction_covers_solid_angle() {
        let k = make_kernel(KernelSpec::cone(1.5, 3, 0.6)).unwrap();
        let frac = level_set_fraction(&k, &[0.2, -0.1, 0.3], 0.7, 1.0 - 1e-9, 40_000, 9).unwrap();
        let solid = 2.0 * cap_fraction(3, 0.6);
        assert!(frac >= solid - 0.02, "{frac} {solid}");
    }

    #[test]
    fn budget_failure_is_reported() {
        let k = make_kernel(KernelSpec::alpha_stable(1.0, 3)).unwrap();
        let plan = SamplingPlan::default_for(3, 0.1, 2.0, 1).with_budget(Some(1.0));
        assert!(!check_condition(&k, Condition::U1, &plan).unwrap().passed);
    }
}
