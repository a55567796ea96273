//! Closed-form Green functions of the unit ball.
//!
//! For the fractional Laplacian,
//! `G(x,y) = κ |x-y|^{α-d} ∫_0^{r₀} s^{α/2-1} (1+s)^{-d/2} ds` with
//! `r₀ = (1-|x|²)(1-|y|²)/|x-y|²` and `κ = Γ(d/2) / (2^α π^{d/2} Γ(α/2)²)`.
//! Under `s = t/(1-t)` the integral is `B(α/2, (d-α)/2) · I_{r₀/(1+r₀)}(α/2, (d-α)/2)`.

use crate::error::{Error, Result};
use crate::lattice::GridDomain;
use crate::quadrature::{adaptive, subsampled_box};
use crate::special::{ball_volume, beta_reg_split, ln_beta, ln_gamma, sphere_area};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallGreenParams {
    pub dim: usize,
    pub alpha: f64,
}

impl BallGreenParams {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain("dimension must be at least 2"));
        }
        if !(alpha > 0.0 && alpha <= 2.0) || !(dim as f64 > alpha) {
            return Err(Error::domain(format!(
                "need 0 < alpha ≤ 2 and d > alpha, got alpha = {alpha}, d = {dim}"
            )));
        }
        Ok(BallGreenParams { dim, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegralRoute {
    #[default]
    IncompleteBeta,
    Quadrature,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn check_pair(x: &[f64], y: &[f64], dim: usize) -> Result<f64> {
    if x.len() != dim || y.len() != dim {
        return Err(Error::domain("point dimension does not match"));
    }
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if r2 == 0.0 {
        return Err(Error::domain("Green function is singular at x = y"));
    }
    Ok(r2)
}

pub fn bgr_ball_green(x: &[f64], y: &[f64], params: &BallGreenParams) -> Result<f64> {
    bgr_ball_green_with(x, y, params, IntegralRoute::IncompleteBeta)
}

pub fn bgr_ball_green_with(
    x: &[f64],
    y: &[f64],
    params: &BallGreenParams,
    route: IntegralRoute,
) -> Result<f64> {
    let d = params.dim as f64;
    let alpha = params.alpha;
    let r2 = check_pair(x, y, params.dim)?;
    let (nx, ny) = (norm2(x), norm2(y));
    if nx >= 1.0 || ny >= 1.0 {
        return Ok(0.0);
    }
    if alpha == 2.0 {
        return newtonian_ball_green(x, y, params.dim);
    }
    let (a, b) = (0.5 * alpha, 0.5 * (d - alpha));
    let ln_kappa = ln_gamma(0.5 * d) - alpha * 2f64.ln() - 0.5 * d * PI.ln() - 2.0 * ln_gamma(a);
    let r0 = (1.0 - nx) * (1.0 - ny) / r2;
    let integral = match route {
        IntegralRoute::IncompleteBeta => {
            let t = r0 / (1.0 + r0);
            let one_minus = 1.0 / (1.0 + r0);
            ln_beta(a, b).exp() * beta_reg_split(a, b, t, one_minus)
        }
        IntegralRoute::Quadrature => {
            // s = u^{1/a} removes the s^{a-1} endpoint singularity
            let upper = r0.powf(a);
            adaptive(
                |u| (1.0 + u.powf(1.0 / a)).powf(-0.5 * d),
                0.0,
                upper,
                1e-12,
                0.0,
            )? / a
        }
    };
    Ok(ln_kappa.exp() * r2.powf(0.5 * (alpha - d)) * integral)
}

/// Image-charge Green function of `-Δ` on the unit ball, `-ΔG(·,y) = δ_y`.
pub fn newtonian_ball_green(x: &[f64], y: &[f64], dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::domain("the Newtonian kernel here needs d ≥ 3"));
    }
    let r2 = check_pair(x, y, dim)?;
    let (nx, ny) = (norm2(x), norm2(y));
    if nx >= 1.0 || ny >= 1.0 {
        return Ok(0.0);
    }
    let d = dim as f64;
    let c = 1.0 / ((d - 2.0) * sphere_area(dim));
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let image2 = nx * ny - 2.0 * xy + 1.0;
    Ok(c * (r2.powf(1.0 - 0.5 * d) - image2.powf(1.0 - 0.5 * d)))
}

/// `Γ((d-α)/2) / (2^α π^{d/2} Γ(α/2))`, the coefficient of `|x-y|^{α-d}`
/// on the diagonal; at `α = 2` exactly `1/(d(d-2)|B₁|)`.
pub fn near_diagonal_constant(dim: usize, alpha: f64) -> Result<f64> {
    let d = dim as f64;
    if dim < 3 || !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!(
            "need d ≥ 3 and 0 < alpha ≤ 2, got d = {dim}, alpha = {alpha}"
        )));
    }
    if alpha == 2.0 {
        return Ok(1.0 / (d * (d - 2.0) * ball_volume(dim)));
    }
    let ln =
        ln_gamma(0.5 * (d - alpha)) - alpha * 2f64.ln() - 0.5 * d * PI.ln() - ln_gamma(0.5 * alpha);
    Ok(ln.exp())
}

/// The oracle sampled at the grid nodes for source `y0`. The node at `y0`,
/// if any, carries the mean of the oracle over its lattice cell.
pub fn oracle_field(grid: &GridDomain, y0: &[f64], params: &BallGreenParams) -> Result<Vec<f64>> {
    (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            let r2: f64 = p.iter().zip(y0).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2 > 1e-24 {
                bgr_ball_green(&p, y0, params)
            } else {
                let mut err = None;
                let hw = 0.5 * grid.h;
                let v = subsampled_box(&p, hw, 8, |z| match bgr_ball_green(z, y0, params) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(v / grid.h.powi(grid.dim as i32)),
                }
            }
        })
        .collect()
}
