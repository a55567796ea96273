//! Gauss–Legendre rules, adaptive 1-D integration, tensor cell quadrature
//! and product rules on the unit sphere.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Adaptive bisection on a 10-point Gauss–Legendre rule.
///
/// A panel is accepted when it agrees with its two halves to within its share
/// of `max(rel_tol·|I|, abs_tol)`. After `PANEL_BUDGET` panels, or at depth 60,
/// panels are accepted as they are; the result is an error carrying the trace
/// of those panels if their summed disagreement exceeds `1e-4·|I|`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    const PANEL_BUDGET: usize = 20_000;
    if a == b {
        return Ok(0.0);
    }
    let rule = GaussLegendre::new(10);
    let whole = rule.integrate(a, b, &f);
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total: f64 = 0.0;
    let mut unresolved = 0.0;
    let mut trace = Vec::new();
    let mut panels = 0usize;
    let scale_guess = whole.abs();
    while let Some((lo, hi, est, depth)) = stack.pop() {
        panels += 1;
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &f);
        let right = rule.integrate(mid, hi, &f);
        let refined = left + right;
        if !refined.is_finite() {
            return Err(Error::Numeric {
                message: format!("non-finite integrand on [{lo}, {hi}]"),
                trace,
            });
        }
        let err = (refined - est).abs();
        let share = (hi - lo) / (b - a).abs();
        let tol = (rel_tol * scale_guess.max(total.abs())).max(abs_tol) * share.max(1e-300);
        if err <= tol {
            total += refined;
        } else if depth >= 60 || panels >= PANEL_BUDGET {
            total += refined;
            unresolved += err;
            if trace.len() < 64 {
                trace.push((lo, hi, err));
            }
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    if unresolved > (1e-4 * total.abs()).max(abs_tol) {
        return Err(Error::Numeric {
            message: format!(
                "adaptive quadrature did not converge (unresolved error {unresolved:.3e})"
            ),
            trace,
        });
    }
    Ok(total)
}

/// Integral of `f` over the axis-aligned box `center ± half_width` (every
/// axis) with a tensor Gauss–Legendre rule of the given order.
pub fn tensor_box<F: FnMut(&[f64]) -> f64>(
    rule: &GaussLegendre,
    center: &[f64],
    half_width: f64,
    mut f: F,
) -> f64 {
    let dim = center.len();
    let n = rule.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..dim {
            point[k] = center[k] + half_width * rule.nodes[idx[k]];
            w *= rule.weights[idx[k]];
        }
        acc += w * f(&point);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == dim {
                return acc * half_width.powi(dim as i32);
            }
        }
    }
}

/// Adaptive tensor quadrature over a cube: compares the rule on the cube with
/// the rule on its `2^d` children and recurses where they disagree.
pub fn adaptive_box<F: Fn(&[f64]) -> f64>(
    rule: &GaussLegendre,
    center: &[f64],
    half_width: f64,
    rel_tol: f64,
    max_depth: usize,
    f: &F,
) -> f64 {
    let coarse = tensor_box(rule, center, half_width, f);
    adaptive_box_rec(rule, center, half_width, coarse, rel_tol, max_depth, f)
}

fn adaptive_box_rec<F: Fn(&[f64]) -> f64>(
    rule: &GaussLegendre,
    center: &[f64],
    half_width: f64,
    coarse: f64,
    rel_tol: f64,
    depth: usize,
    f: &F,
) -> f64 {
    let dim = center.len();
    let hw = 0.5 * half_width;
    let children: Vec<Vec<f64>> = (0..1usize << dim)
        .map(|mask| {
            (0..dim)
                .map(|k| center[k] + if mask >> k & 1 == 1 { hw } else { -hw })
                .collect()
        })
        .collect();
    let parts: Vec<f64> = children
        .iter()
        .map(|c| tensor_box(rule, c, hw, f))
        .collect();
    let fine: f64 = parts.iter().sum();
    if depth == 0 || (fine - coarse).abs() <= rel_tol * fine.abs() {
        return fine;
    }
    children
        .iter()
        .zip(parts)
        .map(|(c, p)| adaptive_box_rec(rule, c, hw, p, rel_tol, depth - 1, f))
        .sum()
}

/// Midpoint sub-sampling of a cube: `m^d` equal sub-cells, integrand evaluated
/// at their centres. Used for indicator-valued kernels.
pub fn subsampled_box<F: FnMut(&[f64]) -> f64>(
    center: &[f64],
    half_width: f64,
    m: usize,
    mut f: F,
) -> f64 {
    let dim = center.len();
    let step = 2.0 * half_width / m as f64;
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut acc = 0.0;
    loop {
        for k in 0..dim {
            point[k] = center[k] - half_width + (idx[k] as f64 + 0.5) * step;
        }
        acc += f(&point);
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == dim {
                return acc * step.powi(dim as i32);
            }
        }
    }
}

/// Product quadrature on `S^{d-1}`: weights sum to `|S^{d-1}|`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `order` Gauss–Legendre nodes per polar angle and `2·order` equispaced
    /// azimuths.
    pub fn new(dim: usize, order: usize) -> Self {
        assert!(dim >= 2);
        if dim == 2 {
            let m = 2 * order;
            let points = (0..m)
                .map(|i| {
                    let phi = 2.0 * PI * (i as f64 + 0.5) / m as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect();
            return SphereRule {
                dim,
                points,
                weights: vec![2.0 * PI / m as f64; m],
            };
        }
        let lower = SphereRule::new(dim - 1, order);
        let gl = GaussLegendre::new(order);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let psi = 0.5 * PI * (x + 1.0);
            let (s, c) = psi.sin_cos();
            let jac = 0.5 * PI * w * s.powi(dim as i32 - 2);
            for (p, wl) in lower.points.iter().zip(&lower.weights) {
                let mut q: Vec<f64> = p.iter().map(|v| v * s).collect();
                q.push(c);
                points.push(q);
                weights.push(jac * wl);
            }
        }
        SphereRule {
            dim,
            points,
            weights,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::sphere_area;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(6);
        // exact through degree 11
        let v = rule.integrate(0.0, 2.0, |x| x.powi(11) - 3.0 * x.powi(4));
        let exact = 2f64.powi(12) / 12.0 - 3.0 * 2f64.powi(5) / 5.0;
        assert!((v - exact).abs() < 1e-11 * exact.abs());
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = adaptive(|x| x.powf(-0.5), 0.0, 1.0, 1e-10, 1e-14).unwrap();
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn sphere_rule_integrates_polynomials() {
        for dim in 2..=5 {
            let rule = SphereRule::new(dim, 12);
            let area: f64 = rule.weights.iter().sum();
            assert!((area - sphere_area(dim)).abs() < 1e-12 * area);
            // ∫ θ_1² = |S|/d
            let m2: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| w * p[0] * p[0])
                .sum();
            assert!((m2 - area / dim as f64).abs() < 1e-9 * area, "{dim}: {m2}");
        }
    }

    #[test]
    fn adaptive_box_matches_closed_form() {
        let rule = GaussLegendre::new(4);
        let f = |p: &[f64]| 1.0 / (p.iter().map(|v| v * v).sum::<f64>() + 0.01);
        let v = adaptive_box(&rule, &[0.0, 0.0], 1.0, 1e-10, 8, &f);
        let reference = subsampled_box(&[0.0, 0.0], 1.0, 2000, f);
        assert!((v - reference).abs() < 1e-5 * v, "{v} {reference}");
    }
}
