//! Elementary two-point inequalities behind the energy estimates, as
//! executable predicates with a sampling suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Relative tolerance on the deficit `lhs - rhs`, measured against the
/// magnitude of the terms before cancellation.
pub const DEFICIT_TOL: f64 = 1e-12;

/// Parameters shared by all predicates; each reads only its own fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IneqSample {
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub q: f64,
    pub x: f64,
    pub y: f64,
}

impl IneqSample {
    pub fn ab(a: f64, b: f64) -> Self {
        IneqSample {
            a,
            b,
            s: 0.5,
            eta1: 0.0,
            eta2: 0.0,
            q: 2.0,
            x: 0.0,
            y: 0.0,
        }
    }

    pub fn with_s(self, s: f64) -> Self {
        IneqSample { s, ..self }
    }
}

/// Both sides of `lhs ≤ rhs` and the scale the tolerance is relative to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl Sides {
    /// `(lhs - rhs) / scale`; nonpositive when the inequality holds.
    pub fn deficit(&self) -> f64 {
        if self.scale > 0.0 {
            (self.lhs - self.rhs) / self.scale
        } else {
            0.0
        }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + DEFICIT_TOL * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Lemma {
    /// `c(s)(1-s)^{-2}((1+b)^{(1-s)/2} - (1+a)^{(1-s)/2})² ≤ (b-a)(f(b) - f(a))`,
    /// `f(t) = t(1+t^s)^{-1/s}`, with the stated `c(s) = 8/2^{1/s}`.
    Power,
    /// The same with the sharp constant `c(s) = 2^{2+s-1/s}`.
    PowerSharp,
    /// `|b-a| ≤ 2/(1-s)·|(1+b)^{(1-s)/2} - (1+a)^{(1-s)/2}|·max((1+a),(1+b))^{(1+s)/2}`.
    PowerLower,
    /// `(b-a)(1/a - 1/b) ≥ (ln b - ln a)²`.
    Log,
    /// `(b-a)(η₂² b^{q-1} - η₁² a^{q-1}) ≥ (q-1)/(32q²)(η₂ b^{q/2} - η₁ a^{q/2})² - 2(1∨(q-1)^{-1})(η₂-η₁)²(b^q+a^q)`.
    CutOff,
    /// `(b-a)(b y² - a x²) ≥ ¼(b-a)²(y²+x²) - 4(b²+a²)(y-x)²`.
    Quadratic,
    /// `(b-a)² ≤ 2^{1/s-1}(b-a)(f(b)-f(a))·max(1+a,1+b)^{1+s}`: the chain of the
    /// lower and upper power inequalities with the stated constant.
    Composite,
    /// The same chain with the sharp constant, `2^{1/s-s}`.
    CompositeSharp,
}

impl Lemma {
    pub const ALL: [Lemma; 8] = [
        Lemma::Power,
        Lemma::PowerSharp,
        Lemma::PowerLower,
        Lemma::Log,
        Lemma::CutOff,
        Lemma::Quadratic,
        Lemma::Composite,
        Lemma::CompositeSharp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Lemma::Power => "power-upper",
            Lemma::PowerSharp => "power-upper-sharp",
            Lemma::PowerLower => "power-lower",
            Lemma::Log => "log",
            Lemma::CutOff => "cutoff",
            Lemma::Quadratic => "quadratic",
            Lemma::Composite => "composite",
            Lemma::CompositeSharp => "composite-sharp",
        }
    }

    pub fn evaluate(&self, p: &IneqSample) -> Sides {
        match self {
            Lemma::Power => power_upper(p.a, p.b, p.s, stated_power_constant(p.s)),
            Lemma::PowerSharp => power_upper(p.a, p.b, p.s, sharp_power_constant(p.s)),
            Lemma::PowerLower => power_lower(p.a, p.b, p.s),
            Lemma::Log => log_inequality(p.a, p.b),
            Lemma::CutOff => cutoff_inequality(p.a, p.b, p.eta1, p.eta2, p.q),
            Lemma::Quadratic => quadratic_inequality(p.a, p.b, p.x, p.y),
            Lemma::Composite => composite(p.a, p.b, p.s, (1.0 / p.s - 1.0).exp2()),
            Lemma::CompositeSharp => composite(p.a, p.b, p.s, (1.0 / p.s - p.s).exp2()),
        }
    }
}

pub fn stated_power_constant(s: f64) -> f64 {
    8.0 / (1.0 / s).exp2()
}

/// Largest admissible constant; attained as `a, b → 1`.
pub fn sharp_power_constant(s: f64) -> f64 {
    (2.0 + s - 1.0 / s).exp2()
}

/// `(1+b)^e - (1+a)^e` without cancellation.
fn power_gap(a: f64, b: f64, e: f64) -> f64 {
    (e * a.ln_1p()).exp() * (e * (b.ln_1p() - a.ln_1p())).exp_m1()
}

/// `t(1+t^s)^{-1/s}`, increasing from 0 to 1.
fn saturate(t: f64, s: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    (t.ln() - (s * t.ln()).exp().ln_1p() / s).exp()
}

fn power_upper(a: f64, b: f64, s: f64, constant: f64) -> Sides {
    let gap = power_gap(a, b, 0.5 * (1.0 - s));
    let lhs = constant * gap * gap / ((1.0 - s) * (1.0 - s));
    let (fa, fb) = (saturate(a, s), saturate(b, s));
    let rhs = (b - a) * (fb - fa);
    Sides {
        lhs,
        rhs,
        scale: lhs.abs() + (b - a).abs() * (fa + fb),
    }
}

/// Lemma with `lhs = |b-a|`, `rhs = 2/(1-s)|gap|·max^{(1+s)/2}`.
pub fn lhs_rhs_power_lower(a: f64, b: f64, s: f64) -> (f64, f64) {
    let p = power_lower(a, b, s);
    (p.lhs, p.rhs)
}

/// Both sides of the stated upper power inequality.
pub fn lhs_rhs_power_upper(a: f64, b: f64, s: f64) -> (f64, f64) {
    let p = power_upper(a, b, s, stated_power_constant(s));
    (p.lhs, p.rhs)
}

fn power_lower(a: f64, b: f64, s: f64) -> Sides {
    let lhs = (b - a).abs();
    let top = (0.5 * (1.0 + s) * a.max(b).ln_1p()).exp();
    let rhs = 2.0 / (1.0 - s) * power_gap(a, b, 0.5 * (1.0 - s)).abs() * top;
    Sides {
        lhs,
        rhs,
        scale: lhs + rhs,
    }
}

fn log_inequality(a: f64, b: f64) -> Sides {
    let l = b.ln() - a.ln();
    let rhs = (b - a) * (1.0 / a - 1.0 / b);
    let lhs = l * l;
    Sides {
        lhs,
        rhs,
        scale: lhs + (b - a).abs() * (1.0 / a + 1.0 / b),
    }
}

fn cutoff_inequality(a: f64, b: f64, eta1: f64, eta2: f64, q: f64) -> Sides {
    let (bq1, aq1) = (b.powf(q - 1.0), a.powf(q - 1.0));
    let left = (b - a) * (eta2 * eta2 * bq1 - eta1 * eta1 * aq1);
    let m = eta2 * b.powf(0.5 * q) - eta1 * a.powf(0.5 * q);
    let gain = (q - 1.0) / (32.0 * q * q) * m * m;
    let loss = 2.0 * 1f64.max(1.0 / (q - 1.0)) * (eta2 - eta1).powi(2) * (b.powf(q) + a.powf(q));
    // written as lhs ≤ rhs
    Sides {
        lhs: gain - loss,
        rhs: left,
        scale: gain + loss + (b - a).abs() * (eta2 * eta2 * bq1 + eta1 * eta1 * aq1),
    }
}

fn quadratic_inequality(a: f64, b: f64, x: f64, y: f64) -> Sides {
    let left = (b - a) * (b * y * y - a * x * x);
    let gain = 0.25 * (b - a).powi(2) * (y * y + x * x);
    let loss = 4.0 * (b * b + a * a) * (y - x).powi(2);
    Sides {
        lhs: gain - loss,
        rhs: left,
        scale: gain + loss + (b - a).abs() * (b.abs() * y * y + a.abs() * x * x),
    }
}

fn composite(a: f64, b: f64, s: f64, constant: f64) -> Sides {
    let (fa, fb) = (saturate(a, s), saturate(b, s));
    let weight = ((1.0 + s) * a.max(b).ln_1p()).exp();
    let lhs = (b - a) * (b - a);
    let rhs = constant * (b - a) * (fb - fa) * weight;
    Sides {
        lhs,
        rhs,
        scale: lhs + constant * (b - a).abs() * (fa + fb) * weight,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub lemma: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// Largest relative deficit seen; nonpositive when every sample holds.
    pub worst_deficit: f64,
    pub worst_sample: Option<IneqSample>,
}

impl SuiteRow {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Magnitude on `[1e-6, 1e6]` log-uniformly, occasionally exactly zero.
fn magnitude(rng: &mut ChaCha8Rng, allow_zero: bool) -> f64 {
    if allow_zero && rng.gen_bool(0.02) {
        0.0
    } else {
        log_uniform(rng, 1e-6, 1e6)
    }
}

/// `s ∈ (0,1)`, with half of the mass clustered at the endpoints.
fn exponent_s(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => log_uniform(rng, 1e-3, 0.5),
        1 => 1.0 - log_uniform(rng, 1e-6, 0.5),
        _ => rng.gen_range(1e-3..1.0 - 1e-6),
    }
}

/// `q ∈ (1, 10]`, with a cluster near 1.
fn exponent_q(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.3) {
        1.0 + log_uniform(rng, 1e-6, 1.0)
    } else {
        rng.gen_range(1.0 + 1e-6..=10.0)
    }
}

fn draw(lemma: Lemma, rng: &mut ChaCha8Rng) -> IneqSample {
    let mut p = IneqSample::ab(0.0, 0.0);
    match lemma {
        Lemma::Power
        | Lemma::PowerSharp
        | Lemma::PowerLower
        | Lemma::Composite
        | Lemma::CompositeSharp => {
            p.a = magnitude(rng, true);
            p.b = if rng.gen_bool(0.01) {
                p.a
            } else {
                magnitude(rng, true)
            };
            p.s = exponent_s(rng);
        }
        Lemma::Log => {
            p.a = magnitude(rng, false);
            p.b = if rng.gen_bool(0.01) {
                p.a
            } else {
                magnitude(rng, false)
            };
        }
        Lemma::CutOff => {
            p.a = magnitude(rng, true);
            p.b = magnitude(rng, true);
            p.eta1 = if rng.gen_bool(0.1) {
                0.0
            } else {
                rng.gen_range(0.0..=1.0)
            };
            p.eta2 = if rng.gen_bool(0.1) {
                p.eta1
            } else {
                rng.gen_range(0.0..=1.0)
            };
            p.q = exponent_q(rng);
        }
        Lemma::Quadratic => {
            p.a = rng.gen_range(-10.0..=10.0);
            p.b = rng.gen_range(-10.0..=10.0);
            p.x = rng.gen_range(-10.0..=10.0);
            p.y = rng.gen_range(-10.0..=10.0);
        }
    }
    p
}

/// `n` fixed-seed samples per predicate; each predicate has its own stream.
pub fn run_suite(seed: u64, n: usize) -> Vec<SuiteRow> {
    Lemma::ALL
        .iter()
        .enumerate()
        .map(|(idx, lemma)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let mut row = SuiteRow {
                lemma: lemma.name(),
                samples: n,
                violations: 0,
                worst_deficit: f64::NEG_INFINITY,
                worst_sample: None,
            };
            for _ in 0..n {
                let p = draw(*lemma, &mut rng);
                let sides = lemma.evaluate(&p);
                let d = sides.deficit();
                if !sides.holds() || !d.is_finite() {
                    row.violations += 1;
                }
                if !(d <= row.worst_deficit) {
                    row.worst_deficit = d;
                    row.worst_sample = Some(p);
                }
            }
            if n == 0 {
                row.worst_deficit = 0.0;
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_arguments_give_equality() {
        let p = IneqSample::ab(1.0, 1.0);
        let s = Lemma::Power.evaluate(&p);
        assert_eq!((s.lhs, s.rhs), (0.0, 0.0));
        assert!(s.holds());
        for l in [Lemma::PowerLower, Lemma::Log, Lemma::Composite] {
            assert!(l.evaluate(&IneqSample::ab(2.0, 2.0)).holds());
        }
    }

    #[test]
    fn stated_power_constant_fails_at_zero_one() {
        // 8·(2^{1/4} - 1)² = 0.28639 against f(1) = 1/4
        let (l, r) = lhs_rhs_power_upper(0.0, 1.0, 0.5);
        assert!((l - 8.0 * (2f64.powf(0.25) - 1.0).powi(2)).abs() < 1e-15);
        assert!((r - 0.25).abs() < 1e-15);
        assert!(l > r);
        assert!(Lemma::PowerSharp
            .evaluate(&IneqSample::ab(0.0, 1.0))
            .holds());
    }

    #[test]
    fn sharp_constant_is_attained_near_one() {
        let s = 0.5;
        let p = IneqSample::ab(1.0, 1.0 + 1e-4).with_s(s);
        let sides = Lemma::PowerSharp.evaluate(&p);
        assert!((sides.lhs / sides.rhs - 1.0).abs() < 1e-3);
        assert!(sharp_power_constant(s) < stated_power_constant(s));
    }

    #[test]
    fn power_cases_from_direct_arithmetic() {
        assert!(Lemma::PowerSharp
            .evaluate(&IneqSample::ab(3.0, 7.0).with_s(0.9))
            .holds());
        assert!(Lemma::Power
            .evaluate(&IneqSample::ab(3.0, 7.0).with_s(0.9))
            .holds());
        let (l, r) = lhs_rhs_power_lower(0.0, 3.0, 0.5);
        // 3 ≤ 4·(4^{1/4} - 1)·4^{3/4}
        assert_eq!(l, 3.0);
        assert!((r - 4.0 * (2f64.sqrt() - 1.0) * 8f64.sqrt()).abs() < 1e-13);
        assert!(l <= r);
    }

    #[test]
    fn log_case_at_e() {
        let e = std::f64::consts::E;
        let s = Lemma::Log.evaluate(&IneqSample::ab(1.0, e));
        assert!((s.rhs - (e - 1.0).powi(2) / e).abs() < 1e-15);
        assert!((s.rhs - 1.0862).abs() < 1e-4);
        assert_eq!(s.lhs, 1.0);
    }

    #[test]
    fn cutoff_case() {
        let p = IneqSample {
            eta1: 0.0,
            eta2: 1.0,
            q: 2.0,
            ..IneqSample::ab(0.0, 1.0)
        };
        let s = Lemma::CutOff.evaluate(&p);
        assert_eq!(s.rhs, 1.0);
        assert!((s.lhs - (1.0 / 128.0 - 2.0)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_case() {
        let p = IneqSample {
            x: 0.0,
            y: 1.0,
            ..IneqSample::ab(0.0, 1.0)
        };
        let s = Lemma::Quadratic.evaluate(&p);
        assert_eq!((s.lhs, s.rhs), (-3.75, 1.0));
    }

    #[test]
    fn suite_is_deterministic_and_handles_empty_runs() {
        assert_eq!(run_suite(7, 500), run_suite(7, 500));
        assert!(run_suite(7, 0)
            .iter()
            .all(|r| r.passed() && r.worst_sample.is_none()));
    }

    #[test]
    fn sampled_suite_separates_true_and_false_statements() {
        for row in run_suite(1, 20_000) {
            let false_statement = matches!(row.lemma, "power-upper" | "composite");
            assert_eq!(row.passed(), !false_statement, "{row:?}");
        }
    }

    proptest! {
        #[test]
        fn log_inequality_holds(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            prop_assert!(Lemma::Log.evaluate(&IneqSample::ab(a, b)).holds());
        }

        #[test]
        fn sharp_power_inequality_holds(a in 0f64..1e4, b in 0f64..1e4, s in 0.01f64..0.999) {
            let p = IneqSample::ab(a, b).with_s(s);
            prop_assert!(Lemma::PowerSharp.evaluate(&p).holds());
            prop_assert!(Lemma::PowerLower.evaluate(&p).holds());
            prop_assert!(Lemma::CompositeSharp.evaluate(&p).holds());
        }

        #[test]
        fn quadratic_inequality_holds(a in -10f64..10.0, b in -10f64..10.0, x in -10f64..10.0, y in -10f64..10.0) {
            let p = IneqSample { x, y, ..IneqSample::ab(a, b) };
            prop_assert!(Lemma::Quadratic.evaluate(&p).holds());
        }

        #[test]
        fn cutoff_inequality_holds(a in 0f64..100.0, b in 0f64..100.0, e1 in 0f64..2.0, e2 in 0f64..2.0, q in 1.001f64..10.0) {
            let p = IneqSample { eta1: e1, eta2: e2, q, ..IneqSample::ab(a, b) };
            prop_assert!(Lemma::CutOff.evaluate(&p).holds());
        }

        #[test]
        fn interchanging_a_and_b_is_harmless(a in 0f64..1e3, b in 0f64..1e3, s in 0.01f64..0.99) {
            let l = Lemma::Power.evaluate(&IneqSample::ab(a, b).with_s(s));
            let r = Lemma::Power.evaluate(&IneqSample::ab(b, a).with_s(s));
            prop_assert!((l.lhs - r.lhs).abs() <= 1e-12 * l.scale);
            prop_assert!((l.rhs - r.rhs).abs() <= 1e-12 * l.scale);
        }
    }
}
