//! Gamma-function helpers and geometric constants of the unit sphere.
//!
//! Log-gamma and the regularized incomplete beta come from `statrs`; everything
//! here only composes them so that no intermediate overflows and the pole of
//! `Γ(-α/2)` at `α = 2` is never touched.

use statrs::function::{beta, gamma};
use std::f64::consts::PI;

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// `ln |Γ(-s)|` for `s ∈ (0, 1)`, via `Γ(-s) = Γ(1-s) / (-s)`.
pub fn ln_abs_gamma_neg(s: f64) -> f64 {
    debug_assert!(s > 0.0 && s < 1.0);
    gamma::ln_gamma(1.0 - s) - s.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    gamma::ln_gamma(a) + gamma::ln_gamma(b) - gamma::ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)` given `x` and `1 - x` separately.
///
/// Passing the complement explicitly keeps full relative accuracy when `x` is
/// within a few ulps of one.
pub fn beta_reg_split(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    if x <= 0.5 {
        beta::beta_reg(a, b, x)
    } else {
        1.0 - beta::beta_reg(b, a, one_minus_x)
    }
}

/// Surface area `|S^{d-1}|` of the unit sphere in `R^d`.
pub fn sphere_area(dim: usize) -> f64 {
    let d = dim as f64;
    2.0 * (0.5 * d * PI.ln() - ln_gamma(0.5 * d)).exp()
}

/// Volume `|B_1|` of the unit ball in `R^d`.
pub fn ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    (0.5 * d * PI.ln() - ln_gamma(0.5 * d + 1.0)).exp()
}

/// Fraction of `S^{d-1}` covered by the cap `{θ : θ·e > t}`.
///
/// Uses `|{θ_1 > t}| / |S^{d-1}| = ½ I_{1-t²}((d-1)/2, ½)` for `t ≥ 0`.
pub fn cap_fraction(dim: usize, t: f64) -> f64 {
    if t >= 1.0 {
        return 0.0;
    }
    if t <= -1.0 {
        return 1.0;
    }
    if dim == 1 {
        return if t < 0.0 { 1.0 } else { 0.5 };
    }
    let a = 0.5 * (dim as f64 - 1.0);
    let one_minus = (1.0 - t) * (1.0 + t);
    let half = 0.5 * beta_reg_split(a, 0.5, one_minus, t * t);
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}
