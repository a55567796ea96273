//! Catalogue of symmetric jump kernels `k(x, y)` and their radial integrals.
//!
//! Every family is normalised so that `k ≤ c (2-α) |y-x|^{-d-α}` with a
//! constant that stays bounded as `α → 2`; the α-stable family carries the
//! exact fractional-Laplacian constant instead.

mod conditions;

pub use conditions::{
    check_condition, level_set_fraction, Condition, ConditionReport, SamplingPlan, Witness,
};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive, SphereRule};
use crate::special::{cap_fraction, ln_abs_gamma_neg, ln_gamma, sphere_area};
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type CoefficientFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Symmetric coefficient field `a(x, y) ∈ [1/Λ, Λ]` for the bounded-coefficient family.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// `a(x, y) = Λ^{sin(ω Σ_k (x_k + y_k))}`.
    Oscillating {
        lambda: f64,
        frequency: f64,
    },
    /// User-supplied field. The caller promises symmetry and the bound `lambda`.
    Custom {
        lambda: f64,
        field: CoefficientFn,
    },
}

impl Coefficient {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Oscillating { lambda, frequency } => {
                let s: f64 = x.iter().zip(y).map(|(a, b)| a + b).sum();
                lambda.powf((frequency * s).sin())
            }
            Coefficient::Custom { field, .. } => field(x, y),
        }
    }

    /// The ellipticity bound `Λ ≥ 1`.
    pub fn lambda(&self) -> f64 {
        match self {
            Coefficient::Constant(v) => v.max(1.0 / v),
            Coefficient::Oscillating { lambda, .. } | Coefficient::Custom { lambda, .. } => *lambda,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "Constant({v})"),
            Coefficient::Oscillating { lambda, frequency } => {
                write!(
                    f,
                    "Oscillating {{ lambda: {lambda}, frequency: {frequency} }}"
                )
            }
            Coefficient::Custom { lambda, .. } => write!(f, "Custom {{ lambda: {lambda} }}"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum KernelFamily {
    /// `C(d,α) |y-x|^{-d-α}`, the fractional Laplacian.
    AlphaStable,
    /// `(2-α)|z|^{-d-α}` restricted to the double cone `|ẑ·axis| > aperture`.
    Cone { aperture: f64, axis: Vec<f64> },
    /// `(2-α)|z|^{-d-α}` on `⋃_n B(±x_n, c a^{-n})`, `x_n = ½(1+a) a^{-n} e_1`.
    AnnulusUnion { ratio: f64, ball_fraction: f64 },
    /// `(2-α) a(x,y) |y-x|^{-d-α}`.
    BoundedCoeff { coefficient: Coefficient },
    /// Planar `(2-α) 1_{Γ∩B_1}(z) |z|^{-2-γ}` with `γ = α - 1 + 1/b`.
    Corner { b: f64 },
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::AlphaStable => "alpha_stable",
            KernelFamily::Cone { .. } => "cone",
            KernelFamily::AnnulusUnion { .. } => "annulus_union",
            KernelFamily::BoundedCoeff { .. } => "bounded_coeff",
            KernelFamily::Corner { .. } => "corner",
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub alpha: f64,
    pub dim: usize,
    /// Permits `dim = 2`, which is outside the theory (it needs `d ≥ 3`).
    pub smoke_test: bool,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, alpha: f64, dim: usize) -> Self {
        KernelSpec {
            family,
            alpha,
            dim,
            smoke_test: false,
        }
    }

    pub fn alpha_stable(alpha: f64, dim: usize) -> Self {
        Self::new(KernelFamily::AlphaStable, alpha, dim)
    }

    /// Double cone around `e_d`.
    pub fn cone(alpha: f64, dim: usize, aperture: f64) -> Self {
        let mut axis = vec![0.0; dim];
        axis[dim - 1] = 1.0;
        Self::new(KernelFamily::Cone { aperture, axis }, alpha, dim)
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        KernelSpec {
            alpha,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alpha;
        if !(a > 0.0 && a < 2.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 2), got {a}")));
        }
        if self.dim < 2 {
            return Err(Error::domain(format!(
                "dimension must be at least 2, got {}",
                self.dim
            )));
        }
        if self.dim == 2 && !self.smoke_test {
            return Err(Error::domain(
                "dimension 2 is only available in smoke-test mode",
            ));
        }
        match &self.family {
            KernelFamily::AlphaStable => {}
            KernelFamily::Cone { aperture, axis } => {
                if !(*aperture > 0.0 && *aperture < 1.0) {
                    return Err(Error::domain(format!(
                        "cone aperture must lie in (0, 1), got {aperture}"
                    )));
                }
                if axis.len() != self.dim {
                    return Err(Error::domain("cone axis dimension mismatch"));
                }
                let n: f64 = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(n > 0.0) || (n - 1.0).abs() > 1e-12 {
                    return Err(Error::domain("cone axis must be a unit vector"));
                }
            }
            KernelFamily::AnnulusUnion {
                ratio,
                ball_fraction,
            } => {
                if !(*ratio > 1.0) {
                    return Err(Error::domain(format!(
                        "annulus ratio must exceed 1, got {ratio}"
                    )));
                }
                let cmax = 0.5 * (ratio - 1.0);
                if !(*ball_fraction > 0.0 && *ball_fraction <= cmax) {
                    return Err(Error::domain(format!(
                        "ball fraction must lie in (0, {cmax}] so each ball fits its annulus, got {ball_fraction}"
                    )));
                }
            }
            KernelFamily::BoundedCoeff { coefficient } => {
                let l = coefficient.lambda();
                if !(l >= 1.0) || !l.is_finite() {
                    return Err(Error::domain(format!(
                        "coefficient bound must satisfy Λ ≥ 1, got {l}"
                    )));
                }
                if let Coefficient::Constant(v) = coefficient {
                    if !(*v > 0.0) {
                        return Err(Error::domain("constant coefficient must be positive"));
                    }
                }
            }
            KernelFamily::Corner { b } => {
                if !(*b > 0.0 && *b < 1.0) {
                    return Err(Error::domain(format!(
                        "corner exponent b must lie in (0, 1), got {b}"
                    )));
                }
                if self.dim != 2 || !self.smoke_test {
                    return Err(Error::domain(
                        "corner kernel is planar and needs smoke-test mode",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Normalisation constant of the fractional Laplacian,
/// `2^α Γ((d+α)/2) / (π^{d/2} |Γ(-α/2)|)`, evaluated in log space.
pub fn stable_constant(dim: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 2), got {alpha}"
        )));
    }
    if dim < 1 {
        return Err(Error::domain("dimension must be positive"));
    }
    let d = dim as f64;
    let ln = alpha * 2f64.ln() + ln_gamma(0.5 * (d + alpha))
        - 0.5 * d * PI.ln()
        - ln_abs_gamma_neg(0.5 * alpha);
    Ok(ln.exp())
}

/// Symmetry group of a translation-invariant kernel acting on lattice offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffsetSymmetry {
    /// All coordinate permutations and sign flips.
    Hyperoctahedral,
    /// Sign flips of every coordinate, permutations of the coordinates other than this one.
    AxisAligned(usize),
    /// Only `z ↦ -z`.
    Central,
}

/// How tails of kernels without a closed form are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailMode {
    #[default]
    Exact,
    /// Bound by the isotropic `(2-α)|z|^{-d-α}` tail.
    StableBound,
}

/// A validated kernel ready for evaluation.
#[derive(Debug, Clone)]
pub struct KernelInstance {
    pub spec: KernelSpec,
    pub is_translation_invariant: bool,
    pub symmetrized: bool,
    /// Prefactor in front of `|z|^{-d-α}` (or `|z|^{-2-γ}` for the corner family).
    pub normalization: f64,
    sphere: f64,
    sphere_rule: Option<Arc<SphereRule>>,
}

pub fn make_kernel(spec: KernelSpec) -> Result<KernelInstance> {
    spec.validate()?;
    let alpha = spec.alpha;
    let normalization = match spec.family {
        KernelFamily::AlphaStable => stable_constant(spec.dim, alpha)?,
        _ => 2.0 - alpha,
    };
    let is_translation_invariant = !matches!(spec.family, KernelFamily::BoundedCoeff { .. });
    let sphere_rule = match spec.family {
        KernelFamily::BoundedCoeff { .. } => Some(Arc::new(SphereRule::new(spec.dim, 12))),
        _ => None,
    };
    Ok(KernelInstance {
        sphere: sphere_area(spec.dim),
        spec,
        is_translation_invariant,
        symmetrized: true,
        normalization,
        sphere_rule,
    })
}

fn norm2(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

impl KernelInstance {
    pub fn alpha(&self) -> f64 {
        self.spec.alpha
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn family(&self) -> &KernelFamily {
        &self.spec.family
    }

    /// `k(x, y)`; undefined on the diagonal.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::domain(
                "point dimension does not match kernel dimension",
            ));
        }
        let z: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
        let r2 = norm2(&z);
        if r2 == 0.0 {
            return Err(Error::domain(
                "kernel is defined off the diagonal only (x = y)",
            ));
        }
        Ok(match &self.spec.family {
            KernelFamily::BoundedCoeff { coefficient } => {
                coefficient.eval(x, y) * self.base_profile(r2)
            }
            _ => self.eval_offset(&z),
        })
    }

    /// `(2-α)|z|^{-d-α}` (or `C(d,α)|z|^{-d-α}`) as a function of `|z|²`.
    fn base_profile(&self, r2: f64) -> f64 {
        self.normalization * r2.powf(-0.5 * (self.dim() as f64 + self.alpha()))
    }

    /// `k(0, z)` for translation-invariant families; for the bounded-coefficient
    /// family returns the `a ≡ 1` kernel. Caller guarantees `z ≠ 0`.
    pub fn eval_offset(&self, z: &[f64]) -> f64 {
        let r2 = norm2(z);
        match &self.spec.family {
            KernelFamily::AlphaStable | KernelFamily::BoundedCoeff { .. } => self.base_profile(r2),
            KernelFamily::Cone { aperture, axis } => {
                let dot: f64 = z.iter().zip(axis).map(|(a, b)| a * b).sum();
                if dot * dot > aperture * aperture * r2 {
                    self.base_profile(r2)
                } else {
                    0.0
                }
            }
            KernelFamily::AnnulusUnion { .. } => {
                if self.in_annulus_union(z, r2) {
                    self.base_profile(r2)
                } else {
                    0.0
                }
            }
            KernelFamily::Corner { b } => {
                if r2 >= 1.0 {
                    return 0.0;
                }
                let (x1, x2) = (z[0].abs(), z[1].abs());
                if x2 >= x1.powf(*b) || x1 >= x2.powf(*b) {
                    let gamma = self.alpha() - 1.0 + 1.0 / b;
                    self.normalization * r2.powf(-0.5 * (2.0 + gamma))
                } else {
                    0.0
                }
            }
        }
    }

    fn annulus_params(&self) -> (f64, f64) {
        match self.spec.family {
            KernelFamily::AnnulusUnion {
                ratio,
                ball_fraction,
            } => (ratio, ball_fraction),
            _ => unreachable!(),
        }
    }

    /// Centre distance and radius of the `n`-th ball pair.
    fn annulus_ball(&self, n: i32) -> (f64, f64) {
        let (a, c) = self.annulus_params();
        let s = a.powi(-n);
        (0.5 * (1.0 + a) * s, c * s)
    }

    fn candidate_levels(&self, radius: f64) -> std::ops::RangeInclusive<i32> {
        let (a, _) = self.annulus_params();
        let n = (-radius.ln() / a.ln()).ceil() as i32;
        (n - 1).max(0)..=(n + 1).max(0)
    }

    fn in_annulus_union(&self, z: &[f64], r2: f64) -> bool {
        let rest: f64 = r2 - z[0] * z[0];
        for n in self.candidate_levels(r2.sqrt()) {
            let (dn, rn) = self.annulus_ball(n);
            let m = (z[0] - dn).powi(2).min((z[0] + dn).powi(2));
            if m + rest < rn * rn {
                return true;
            }
        }
        false
    }

    pub fn coefficient(&self, x: &[f64], y: &[f64]) -> f64 {
        match &self.spec.family {
            KernelFamily::BoundedCoeff { coefficient } => coefficient.eval(x, y),
            _ => 1.0,
        }
    }

    /// Homogeneous of degree `-d-α` on all of `R^d \ {0}`.
    pub fn is_homogeneous(&self) -> bool {
        matches!(
            self.spec.family,
            KernelFamily::AlphaStable | KernelFamily::Cone { .. }
        )
    }

    /// Whether the kernel is an indicator-restricted density with jump sets.
    pub fn has_indicator(&self) -> bool {
        matches!(
            self.spec.family,
            KernelFamily::Cone { .. }
                | KernelFamily::AnnulusUnion { .. }
                | KernelFamily::Corner { .. }
        )
    }

    pub fn offset_symmetry(&self) -> OffsetSymmetry {
        match &self.spec.family {
            KernelFamily::AlphaStable
            | KernelFamily::BoundedCoeff { .. }
            | KernelFamily::Corner { .. } => OffsetSymmetry::Hyperoctahedral,
            KernelFamily::Cone { axis, .. } => {
                let hit: Vec<usize> = (0..axis.len()).filter(|&i| axis[i] != 0.0).collect();
                if hit.len() == 1 && axis[hit[0]].abs() == 1.0 {
                    OffsetSymmetry::AxisAligned(hit[0])
                } else {
                    OffsetSymmetry::Central
                }
            }
            KernelFamily::AnnulusUnion { .. } => OffsetSymmetry::AxisAligned(0),
        }
    }

    /// True when the indicator set does not cut the cube `center ± half_width`,
    /// so the kernel is smooth there and tensor quadrature applies.
    pub fn cell_is_uniform(&self, center: &[f64], half_width: f64) -> bool {
        let r = norm2(center).sqrt();
        let reach = half_width * (self.dim() as f64).sqrt();
        if r <= reach {
            return !self.has_indicator();
        }
        match &self.spec.family {
            KernelFamily::AlphaStable | KernelFamily::BoundedCoeff { .. } => true,
            KernelFamily::Cone { aperture, axis } => {
                let dot: f64 = center.iter().zip(axis).map(|(a, b)| a * b).sum();
                let psi = (dot.abs() / r).min(1.0).acos();
                let boundary = aperture.acos();
                let spread = (reach / r).min(1.0).asin();
                (psi - boundary).abs() > spread
            }
            KernelFamily::AnnulusUnion { .. } => {
                let rest = r * r - center[0] * center[0];
                for n in self.candidate_levels((r - reach).max(1e-300)) {
                    let (dn, rn) = self.annulus_ball(n);
                    for s in [dn, -dn] {
                        let dist = ((center[0] - s).powi(2) + rest).sqrt();
                        if (dist - rn).abs() <= reach {
                            return false;
                        }
                    }
                }
                for n in self.candidate_levels(r + reach) {
                    let (dn, rn) = self.annulus_ball(n);
                    for s in [dn, -dn] {
                        let dist = ((center[0] - s).powi(2) + rest).sqrt();
                        if (dist - rn).abs() <= reach {
                            return false;
                        }
                    }
                }
                true
            }
            KernelFamily::Corner { .. } => r - reach >= 1.0,
        }
    }

    /// `∫_{S^{d-1}} k(x, x + ρθ) dθ`.
    pub fn angular_density(&self, x: &[f64], rho: f64) -> f64 {
        let alpha = self.alpha();
        let d = self.dim() as f64;
        match &self.spec.family {
            KernelFamily::AlphaStable => self.normalization * self.sphere * rho.powf(-d - alpha),
            KernelFamily::Cone { aperture, .. } => {
                self.normalization
                    * self.sphere
                    * 2.0
                    * cap_fraction(self.dim(), *aperture)
                    * rho.powf(-d - alpha)
            }
            KernelFamily::AnnulusUnion { .. } => {
                let mut frac = 0.0;
                for n in self.candidate_levels(rho) {
                    frac += 2.0 * self.cap_of_ball(n, rho);
                }
                self.normalization * self.sphere * frac * rho.powf(-d - alpha)
            }
            KernelFamily::BoundedCoeff { coefficient } => {
                let rule = self.sphere_rule.as_ref().expect("sphere rule");
                let mut y = vec![0.0; self.dim()];
                let mut acc = 0.0;
                for (p, w) in rule.points.iter().zip(&rule.weights) {
                    for k in 0..y.len() {
                        y[k] = x[k] + rho * p[k];
                    }
                    acc += w * coefficient.eval(x, &y);
                }
                acc * self.normalization * rho.powf(-d - alpha)
            }
            KernelFamily::Corner { b } => {
                if rho >= 1.0 {
                    return 0.0;
                }
                let gamma = alpha - 1.0 + 1.0 / b;
                self.normalization * corner_arc_measure(rho, *b) * rho.powf(-2.0 - gamma)
            }
        }
    }

    /// Fraction of the sphere `|z| = ρ` lying in the ball `B(x_n, r_n)`.
    fn cap_of_ball(&self, n: i32, rho: f64) -> f64 {
        let (dn, rn) = self.annulus_ball(n);
        if (rho - dn).abs() >= rn {
            return 0.0;
        }
        let t = (rho * rho + dn * dn - rn * rn) / (2.0 * rho * dn);
        cap_fraction(self.dim(), t)
    }

    /// `∫_{lo < |y-x| < hi} |y-x|^p k(x, y) dy`; `hi` may be `f64::INFINITY`.
    pub fn radial_power_integral(&self, x: &[f64], p: f64, lo: f64, hi: f64) -> Result<f64> {
        if !(lo >= 0.0) || !(hi > lo) {
            return Ok(0.0);
        }
        let alpha = self.alpha();
        let e = p - alpha;
        if (self.is_homogeneous() || matches!(self.spec.family, KernelFamily::AnnulusUnion { .. }))
            && lo == 0.0
            && e <= 0.0
        {
            return Err(Error::numeric(format!(
                "∫ |z|^{p} k diverges at the origin for alpha = {alpha}"
            )));
        }
        match &self.spec.family {
            KernelFamily::AlphaStable | KernelFamily::Cone { .. } => {
                if hi.is_infinite() && e >= 0.0 {
                    return Err(Error::numeric(format!("∫ |z|^{p} k diverges at infinity")));
                }
                let dens = self.angular_density(x, 1.0);
                let upper = if hi.is_infinite() { 0.0 } else { hi.powf(e) };
                let lower = if lo == 0.0 { 0.0 } else { lo.powf(e) };
                Ok(dens * (upper - lower) / e)
            }
            KernelFamily::AnnulusUnion { .. } => self.annulus_radial_integral(p, lo, hi),
            KernelFamily::BoundedCoeff { .. } => self.generic_radial_integral(x, p, lo, hi),
            KernelFamily::Corner { .. } => {
                let hi = hi.min(1.0);
                if hi <= lo {
                    return Ok(0.0);
                }
                self.generic_radial_integral(x, p, lo, hi)
            }
        }
    }

    fn annulus_radial_integral(&self, p: f64, lo: f64, hi: f64) -> Result<f64> {
        let (a, _) = self.annulus_params();
        let alpha = self.alpha();
        let pref = self.normalization * self.sphere;
        let ratio = a.powf(-(p - alpha));
        let mut total = 0.0;
        for n in 0..10_000 {
            let (dn, rn) = self.annulus_ball(n);
            let (s0, s1) = (dn - rn, dn + rn);
            if s1 <= lo {
                break;
            }
            let (l, u) = (s0.max(lo), s1.min(hi));
            if u <= l {
                continue;
            }
            let term = adaptive(
                |rho| pref * rho.powf(p - 1.0 - alpha) * 2.0 * self.cap_of_ball(n, rho),
                l,
                u,
                1e-11,
                0.0,
            )?;
            total += term;
            // Below `hi` the union is self-similar: level n+1 is level n scaled by 1/a.
            if lo == 0.0 && s1 <= hi {
                total += term * ratio / (1.0 - ratio);
                break;
            }
        }
        Ok(total)
    }

    /// Radial integral through `Ã(ρ) = ρ^{d+α} ∫_S k(x, x+ρθ) dθ`, with the
    /// power substitution that removes the endpoint singularity.
    fn generic_radial_integral(&self, x: &[f64], p: f64, lo: f64, hi: f64) -> Result<f64> {
        let alpha = self.alpha();
        let d = self.dim() as f64;
        let e = p - alpha;
        let scaled = |rho: f64| rho.powf(d + alpha) * self.angular_density(x, rho);
        if lo == 0.0 {
            if e <= 0.0 {
                return Err(Error::numeric("radial integral diverges at the origin"));
            }
            let v = adaptive(|u| scaled(hi * u.powf(1.0 / e)), 0.0, 1.0, 1e-8, 0.0)?;
            return Ok(hi.powf(e) / e * v);
        }
        let log_integral = |l: f64, u: f64| {
            adaptive(
                |t| {
                    let rho = t.exp();
                    rho.powf(e) * scaled(rho)
                },
                l.ln(),
                u.ln(),
                1e-8,
                0.0,
            )
        };
        if hi.is_infinite() {
            if e >= 0.0 {
                return Err(Error::numeric("radial integral diverges at infinity"));
            }
            // Beyond `FAR·lo` the angular profile of an oscillating coefficient is
            // not resolvable; it is replaced by its log-mean over `[lo, FAR·lo]`.
            const FAR: f64 = 32.0;
            let far = FAR * lo;
            let near = log_integral(lo, far)?;
            let mean = adaptive(|t| scaled(t.exp()), lo.ln(), far.ln(), 1e-8, 0.0)? / FAR.ln();
            return Ok(near + mean * far.powf(e) / (-e));
        }
        log_integral(lo, hi)
    }

    /// `∫_{|y-x| > R} k(x, y) dy`.
    pub fn tail_mass(&self, x: &[f64], radius: f64) -> Result<f64> {
        self.tail_mass_with(x, radius, TailMode::Exact)
    }

    pub fn tail_mass_with(&self, x: &[f64], radius: f64, mode: TailMode) -> Result<f64> {
        if !(radius > 0.0) {
            return Err(Error::domain(format!(
                "tail radius must be positive, got {radius}"
            )));
        }
        if mode == TailMode::StableBound
            && matches!(self.spec.family, KernelFamily::AnnulusUnion { .. })
        {
            let alpha = self.alpha();
            return Ok(self.normalization * self.sphere * radius.powf(-alpha) / alpha);
        }
        self.radial_power_integral(x, 0.0, radius, f64::INFINITY)
    }
}

/// Free function form of [`KernelInstance::tail_mass`].
pub fn tail_mass(k: &KernelInstance, x: &[f64], radius: f64) -> Result<f64> {
    k.tail_mass(x, radius)
}

/// Angular measure of `Γ ∩ {|z| = ρ}` for the planar corner set.
fn corner_arc_measure(rho: f64, b: f64) -> f64 {
    // φ_A solves sin φ = ρ^{b-1} cos^b φ on (0, π/2); the set in the first
    // quadrant is [0, π/2 - φ_A] ∪ [φ_A, π/2].
    let c = rho.powf(b - 1.0);
    let g = |phi: f64| phi.sin() - c * phi.cos().powf(b);
    let (mut lo, mut hi) = (0.0, 0.5 * PI);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let phi_a = 0.5 * (lo + hi);
    let quadrant = (PI - 2.0 * phi_a).min(0.5 * PI);
    4.0 * quadrant
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub family: String,
    pub alpha: f64,
    pub dim: usize,
    pub normalization: f64,
}

impl From<&KernelInstance> for KernelSummary {
    fn from(k: &KernelInstance) -> Self {
        KernelSummary {
            family: k.family().name().to_string(),
            alpha: k.alpha(),
            dim: k.dim(),
            normalization: k.normalization,
        }
    }
}
