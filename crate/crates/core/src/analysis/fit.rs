use crate::error::{Error, Result};
use crate::solve::GreenField;
use serde::Serialize;

/// Radial window `r_min ≤ |x - y₀| ≤ r_max` (closed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub r_min: f64,
    pub r_max: f64,
}

impl Region {
    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_min * (1.0 - 1e-9) && r <= self.r_max * (1.0 + 1e-9)
    }
}

/// Near-diagonal exponent of a field.
///
/// Shell means are fitted by `A r^s - B`: a power-law singular part minus a
/// constant regular part. `slope` is `s`, `intercept` is `ln A`, `offset` is `B`.
/// `raw_slope` is the plain log-log regression slope of the same shells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub offset: f64,
    pub r_range: (f64, f64),
    /// Weighted RMS of the log residuals.
    pub residual: f64,
    /// Number of distinct shells.
    pub n_points: usize,
    pub raw_slope: f64,
    pub raw_residual: f64,
}

/// Shell radius, mean value and node count per distinct `|x - y₀|`.
pub fn shell_means(field: &GreenField, y0: &[f64], region: Region) -> Vec<(f64, f64, usize)> {
    let mut entries: Vec<(f64, f64)> = (0..field.grid.len())
        .filter_map(|i| {
            let p = field.grid.point(i);
            let r = p
                .iter()
                .zip(y0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            region.contains(r).then_some((r, field.values[i]))
        })
        .collect();
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut shells: Vec<(f64, f64, usize)> = Vec::new();
    for (r, v) in entries {
        match shells.last_mut() {
            Some(last) if (r - last.0).abs() <= 1e-9 * r => {
                last.1 += v;
                last.2 += 1;
            }
            _ => shells.push((r, v, 1)),
        }
    }
    shells.iter_mut().for_each(|s| s.1 /= s.2 as f64);
    shells
}

pub fn fit_near_diagonal(field: &GreenField, y0: &[f64], region: Region) -> Result<PowerLawFit> {
    let h = field.grid.h;
    if region.r_min < 2.0 * h * (1.0 - 1e-9) || !(region.r_max > region.r_min) {
        return Err(Error::config(format!(
            "fit region [{}, {}] must satisfy 2h ≤ r_min < r_max with h = {h}",
            region.r_min, region.r_max
        )));
    }
    let shells = shell_means(field, y0, region);
    if shells.len() < 8 {
        return Err(Error::config(format!(
            "fit region holds {} distinct radii; need at least 8",
            shells.len()
        )));
    }
    if shells.iter().any(|s| !(s.1 > 0.0)) {
        return Err(Error::numeric("field is not positive on the fit region"));
    }
    let r: Vec<f64> = shells.iter().map(|s| s.0).collect();
    let g: Vec<f64> = shells.iter().map(|s| s.1).collect();
    let w: Vec<f64> = shells.iter().map(|s| s.2 as f64).collect();
    let (raw_slope, raw_intercept) = weighted_line(&r, &g, &w);
    let raw_residual = log_rms(&w, |j| raw_intercept + raw_slope * r[j].ln() - g[j].ln());
    let model = fit_singular_plus_constant(&r, &g, &w);
    Ok(PowerLawFit {
        slope: model.slope,
        intercept: model.ln_a,
        offset: model.offset,
        r_range: (region.r_min, region.r_max),
        residual: model.residual,
        n_points: shells.len(),
        raw_slope,
        raw_residual,
    })
}

fn log_rms(w: &[f64], res: impl Fn(usize) -> f64) -> f64 {
    let total: f64 = w.iter().sum();
    ((0..w.len()).map(|j| w[j] * res(j).powi(2)).sum::<f64>() / total).sqrt()
}

/// Weighted least squares of `ln g` on `ln r`: `(slope, intercept)`.
fn weighted_line(r: &[f64], g: &[f64], w: &[f64]) -> (f64, f64) {
    let total: f64 = w.iter().sum();
    let mx = (0..r.len()).map(|j| w[j] * r[j].ln()).sum::<f64>() / total;
    let my = (0..r.len()).map(|j| w[j] * g[j].ln()).sum::<f64>() / total;
    let sxy: f64 = (0..r.len())
        .map(|j| w[j] * (r[j].ln() - mx) * (g[j].ln() - my))
        .sum();
    let sxx: f64 = (0..r.len()).map(|j| w[j] * (r[j].ln() - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

struct Model {
    slope: f64,
    ln_a: f64,
    offset: f64,
    residual: f64,
}

fn model_residual(r: &[f64], g: &[f64], w: &[f64], s: f64, ln_a: f64, b: f64) -> f64 {
    let a = ln_a.exp();
    let mut acc = 0.0;
    for j in 0..r.len() {
        let p = a * r[j].powf(s) - b;
        if !(p > 0.0) {
            return f64::INFINITY;
        }
        acc += w[j] * (p.ln() - g[j].ln()).powi(2);
    }
    (acc / w.iter().sum::<f64>()).sqrt()
}

/// Coarse scan over `s` with the linear parameters `(A, B)` solved in closed
/// form, then damped Gauss–Newton on the log residuals.
fn fit_singular_plus_constant(r: &[f64], g: &[f64], w: &[f64]) -> Model {
    let mut best = Model {
        slope: f64::NAN,
        ln_a: 0.0,
        offset: 0.0,
        residual: f64::INFINITY,
    };
    for step in 0..=900 {
        let s = -4.0 + 0.005 * step as f64;
        // minimise Σ w ((A r^s - B)/g - 1)²
        let (mut m11, mut m12, mut m22, mut v1, mut v2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..r.len() {
            let p1 = r[j].powf(s) / g[j];
            let p2 = -1.0 / g[j];
            m11 += w[j] * p1 * p1;
            m12 += w[j] * p1 * p2;
            m22 += w[j] * p2 * p2;
            v1 += w[j] * p1;
            v2 += w[j] * p2;
        }
        let det = m11 * m22 - m12 * m12;
        if det.abs() <= 1e-300 {
            continue;
        }
        let a = (v1 * m22 - v2 * m12) / det;
        let b = (m11 * v2 - m12 * v1) / det;
        if !(a > 0.0) {
            continue;
        }
        let res = model_residual(r, g, w, s, a.ln(), b);
        if res < best.residual {
            best = Model {
                slope: s,
                ln_a: a.ln(),
                offset: b,
                residual: res,
            };
        }
    }
    if !best.residual.is_finite() {
        let (slope, ln_a) = weighted_line(r, g, w);
        let residual = model_residual(r, g, w, slope, ln_a, 0.0);
        return Model {
            slope,
            ln_a,
            offset: 0.0,
            residual,
        };
    }
    let mut x = [best.ln_a, best.slope, best.offset];
    let mut cost = best.residual;
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // J^T W J and J^T W e for e_j = ln(A r^s - B) - ln g
        let a = x[0].exp();
        let mut jtj = [[0.0; 3]; 3];
        let mut jte = [0.0; 3];
        for j in 0..r.len() {
            let rs = r[j].powf(x[1]);
            let p = a * rs - x[2];
            let e = p.ln() - g[j].ln();
            let grad = [a * rs / p, a * rs * r[j].ln() / p, -1.0 / p];
            for u in 0..3 {
                jte[u] += w[j] * grad[u] * e;
                for v in 0..3 {
                    jtj[u][v] += w[j] * grad[u] * grad[v];
                }
            }
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut m = jtj;
            for (u, row) in m.iter_mut().enumerate() {
                row[u] *= 1.0 + lambda;
            }
            let Some(dx) = solve3(m, jte) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [x[0] - dx[0], x[1] - dx[1], x[2] - dx[2]];
            let c = model_residual(r, g, w, trial[1], trial[0], trial[2]);
            if c < cost {
                x = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || cost < 1e-15 {
            break;
        }
    }
    Model {
        slope: x[1],
        ln_a: x[0],
        offset: x[2],
        residual: cost,
    }
}

fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if !(d.abs() > 1e-300) || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][c] = v[row];
        }
        *o = det(mc) / d;
    }
    Some(out)
}
