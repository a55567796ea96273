//! Quantities extracted from Green fields: constants, quasinorms, Harnack ratios.

mod fit;
mod sweep;

pub use fit::{fit_near_diagonal, shell_means, PowerLawFit, Region};
pub use sweep::{robustness_sweep, RobustnessSweep, SweepMode, SweepProblem};

use crate::error::{Error, Result};
use crate::solve::GreenField;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackReport {
    pub m: f64,
    pub r: f64,
    /// `sup/inf` over the closed annulus `r ≤ |x - y₀| ≤ M r`.
    pub ratio: f64,
    /// Measured two-annulus ratio at the same `r`.
    pub c_h: f64,
    /// Smallest `N ≥ 1` with `2^{N-1} + ½ > M/2`.
    pub cover_count: u32,
    /// `c_H^{N+1}`.
    pub chain_prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub c_upper: f64,
    pub c_lower: f64,
    pub fit: PowerLawFit,
    pub quasinorm: f64,
    pub harnack_ratio: f64,
    pub harnack_multi: Option<HarnackReport>,
}

impl BoundReport {
    /// Same report for the field multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        BoundReport {
            c_upper: self.c_upper * factor,
            c_lower: self.c_lower * factor,
            quasinorm: self.quasinorm * factor,
            ..self.clone()
        }
    }
}

fn distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn boundary_distance(field: &GreenField, y0: &[f64]) -> Result<f64> {
    field
        .grid
        .shape
        .boundary_distance(y0)
        .ok_or_else(|| Error::config("boundary distance is unavailable for predicate domains"))
}

/// `sup/inf` of the field over the closed annulus `lo ≤ |x - y₀| ≤ hi`.
pub fn annulus_ratio(field: &GreenField, y0: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let region = Region {
        r_min: lo,
        r_max: hi,
    };
    let (mut min, mut max, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for i in 0..field.grid.len() {
        if region.contains(distance(&field.grid.point(i), y0)) {
            let v = field.values[i];
            min = min.min(v);
            max = max.max(v);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::config(format!(
            "annulus [{lo}, {hi}] contains no node"
        )));
    }
    if !(min > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// `sup_t t·(h^d #{G > t})^{(d-α)/d}`, i.e. `max_k v_k (k h^d)^{(d-α)/d}` over
/// the values sorted in decreasing order.
pub fn weak_quasinorm(values: &[f64], cell_volume: f64, exponent: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().cloned().filter(|x| *x > 0.0).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v.iter()
        .enumerate()
        .map(|(k, x)| x * ((k + 1) as f64 * cell_volume).powf(exponent))
        .fold(0.0, f64::max)
}

/// Constants on `{2h ≤ |x - y₀| ≤ dist(y₀, ∂Ω)/2}`, the weak-`L^{d/(d-α)}`
/// quasinorm and the Harnack ratio on `B_{2r} \ B_r`, `r = dist/4`.
pub fn extract_constants(field: &GreenField, y0: &[f64]) -> Result<BoundReport> {
    let grid = &field.grid;
    let d = grid.dim as f64;
    let alpha = field.alpha;
    let dist = boundary_distance(field, y0)?;
    let region = Region {
        r_min: 2.0 * grid.h,
        r_max: 0.5 * dist,
    };
    let (mut c_upper, mut c_lower, mut n) = (f64::NEG_INFINITY, f64::INFINITY, 0usize);
    for i in 0..grid.len() {
        let r = distance(&grid.point(i), y0);
        if region.contains(r) {
            let v = field.values[i] * r.powf(d - alpha);
            c_upper = c_upper.max(v);
            c_lower = c_lower.min(v);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::config("near-diagonal region contains no node"));
    }
    let fit = fit_near_diagonal(field, y0, region)?;
    let quasinorm = weak_quasinorm(&field.values, grid.h.powi(grid.dim as i32), (d - alpha) / d);
    let r = 0.25 * dist;
    let harnack_ratio = annulus_ratio(field, y0, r, 2.0 * r)?;
    Ok(BoundReport {
        alpha,
        c_upper,
        c_lower,
        fit,
        quasinorm,
        harnack_ratio,
        harnack_multi: None,
    })
}

/// Cover count of the chaining argument for `B_{Mr} \ B_r`.
pub fn cover_count(m: f64) -> u32 {
    let mut n = 1u32;
    while !(2f64.powi(n as i32 - 1) + 0.5 > 0.5 * m) {
        n += 1;
    }
    n
}

/// Harnack ratio over `B_{Mr} \ B_r`; `r` defaults to `max(2h, dist/(2M))`.
pub fn multi_annulus_harnack(
    field: &GreenField,
    y0: &[f64],
    m: f64,
    r: Option<f64>,
) -> Result<HarnackReport> {
    if !(m > 2.0) {
        return Err(Error::domain(format!(
            "annulus factor M must exceed 2, got {m}"
        )));
    }
    let dist = boundary_distance(field, y0)?;
    let r = r.unwrap_or_else(|| (2.0 * field.grid.h).max(dist / (2.0 * m)));
    if m * r > dist * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "annulus B_{{Mr}} with Mr = {} leaves the domain (dist {dist})",
            m * r
        )));
    }
    let ratio = annulus_ratio(field, y0, r, m * r)?;
    let c_h = annulus_ratio(field, y0, r, 2.0 * r)?;
    let n = cover_count(m);
    Ok(HarnackReport {
        m,
        r,
        ratio,
        c_h,
        cover_count: n,
        chain_prediction: c_h.powi(n as i32 + 1),
    })
}

/// `(2-α) h^{2d} Σ_{i≠j} |g_i - g_j|^q / |x_i - x_j|^{d+βq/2}`, plus the pairs
/// with exterior lattice points within `collar` of the grid box, where `g = 0`.
pub fn gagliardo_seminorm(field: &GreenField, beta: f64, q: f64, collar: f64) -> Result<f64> {
    let grid = &field.grid;
    let d = grid.dim as f64;
    let alpha = field.alpha;
    if !(beta > 0.0 && beta < alpha) {
        return Err(Error::domain(format!(
            "beta must lie in (0, alpha) = (0, {alpha}), got {beta}"
        )));
    }
    let q_max = d / (d - 0.5 * alpha);
    if !(q >= 1.0 && q < q_max) {
        return Err(Error::domain(format!(
            "q must lie in [1, {q_max}), got {q}"
        )));
    }
    let n = grid.len();
    if n > 30_000 {
        return Err(Error::config(format!(
            "seminorm double sum limited to 30000 nodes, grid has {n}"
        )));
    }
    let power = 0.5 * (d + 0.5 * beta * q);
    let h = grid.h;
    let cells: Vec<Vec<f64>> = grid.points();
    let mut inner = 0.0;
    for i in 0..n {
        for j in 0..i {
            let diff = (field.values[i] - field.values[j]).abs();
            if diff > 0.0 {
                let r2: f64 = cells[i]
                    .iter()
                    .zip(&cells[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                inner += diff.powf(q) / r2.powf(power);
            }
        }
    }
    let mut outer = 0.0;
    let pad = (collar / h).round() as i64;
    if pad > 0 {
        let lo: Vec<i64> = grid.origin().iter().map(|o| o - pad).collect();
        let ext: Vec<usize> = grid.extent().iter().map(|e| e + 2 * pad as usize).collect();
        let total: usize = ext.iter().product();
        let mut cell = vec![0i64; grid.dim];
        let mut exterior = Vec::new();
        for slot in 0..total {
            let mut rem = slot;
            for k in (0..grid.dim).rev() {
                cell[k] = lo[k] + (rem % ext[k]) as i64;
                rem /= ext[k];
            }
            if grid.index_of(&cell).is_none() {
                exterior.push(cell.iter().map(|c| *c as f64 * h).collect::<Vec<f64>>());
            }
        }
        for i in 0..n {
            let g = field.values[i].abs();
            if g == 0.0 {
                continue;
            }
            let gq = g.powf(q);
            for y in &exterior {
                let r2: f64 = cells[i].iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                outer += gq / r2.powf(power);
            }
        }
    }
    Ok((2.0 - alpha) * h.powf(2.0 * d) * 2.0 * (inner + outer))
}

/// `max_{B_{r/2}(x₀)} G / (⨍_{B_r(x₀)} G^q)^{1/q}`: the constant of the local
/// boundedness estimate without its tail term.
pub fn local_boundedness_ratio(field: &GreenField, x0: &[f64], r: f64, q: f64) -> Result<f64> {
    let (mut sup, mut mean, mut n) = (0.0f64, 0.0, 0usize);
    for i in 0..field.grid.len() {
        let dx = distance(&field.grid.point(i), x0);
        let v = field.values[i].max(0.0);
        if dx <= r {
            mean += v.powf(q);
            n += 1;
            if dx <= 0.5 * r {
                sup = sup.max(v);
            }
        }
    }
    if n == 0 || sup == 0.0 {
        return Err(Error::config(
            "ball around x0 holds no node with positive value",
        ));
    }
    Ok(sup / (mean / n as f64).powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_grid, Shape};
    use std::sync::Arc;

    fn synthetic(alpha: f64, h: f64) -> GreenField {
        let grid = Arc::new(build_grid(Shape::unit_ball(3), h, 3).unwrap());
        let values = (0..grid.len())
            .map(|i| {
                let r = distance(&grid.point(i), &[0.0; 3]);
                if r == 0.0 {
                    h.powf(alpha - 3.0)
                } else {
                    r.powf(alpha - 3.0)
                }
            })
            .collect();
        GreenField::from_values(grid, values, vec![0.0; 3], alpha)
    }

    #[test]
    fn exact_power_law_fit() {
        let f = synthetic(1.5, 0.05);
        let fit = fit_near_diagonal(
            &f,
            &[0.0; 3],
            Region {
                r_min: 0.1,
                r_max: 0.5,
            },
        )
        .unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-8, "{}", fit.slope);
        assert!(fit.residual < 1e-8);
        assert!((fit.raw_slope + 1.5).abs() < 1e-12);
        assert!(fit.raw_residual < 1e-12);
    }

    #[test]
    fn synthetic_constants_and_harnack() {
        let f = synthetic(1.5, 0.05);
        let rep = extract_constants(&f, &[0.0; 3]).unwrap();
        assert!((rep.c_upper - 1.0).abs() < 1e-12 && (rep.c_lower - 1.0).abs() < 1e-12);
        assert!((rep.harnack_ratio - 2f64.powf(1.5)).abs() < 1e-12);
        let multi = multi_annulus_harnack(&f, &[0.0; 3], 4.0, Some(0.2)).unwrap();
        assert!((multi.ratio - 4f64.powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn constant_annulus_has_unit_ratio() {
        let mut f = synthetic(1.5, 0.1);
        f.values.iter_mut().for_each(|v| *v = 3.0);
        assert_eq!(annulus_ratio(&f, &[0.0; 3], 0.25, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn too_few_radii_is_an_error() {
        let f = synthetic(1.5, 0.1);
        assert!(fit_near_diagonal(
            &f,
            &[0.0; 3],
            Region {
                r_min: 0.2,
                r_max: 0.25
            }
        )
        .is_err());
    }

    #[test]
    fn empty_annulus_is_an_error() {
        let f = synthetic(1.5, 0.1);
        assert!(annulus_ratio(&f, &[0.0; 3], 0.01, 0.05).is_err());
    }

    #[test]
    fn nested_annuli_have_ordered_ratios() {
        let f = synthetic(1.3, 0.1);
        let a = multi_annulus_harnack(&f, &[0.0; 3], 2.5, Some(0.2)).unwrap();
        let b = multi_annulus_harnack(&f, &[0.0; 3], 4.0, Some(0.2)).unwrap();
        assert!(b.ratio >= a.ratio);
        assert!(multi_annulus_harnack(&f, &[0.0; 3], 2.0, None).is_err());
        assert!(multi_annulus_harnack(&f, &[0.0; 3], 6.0, Some(0.2)).is_err());
    }

    #[test]
    fn cover_counts() {
        assert_eq!(cover_count(2.5), 1);
        assert_eq!(cover_count(4.0), 2);
        assert_eq!(cover_count(8.0), 3);
        assert_eq!(cover_count(9.0), 4);
    }

    #[test]
    fn two_node_seminorm() {
        let shape = Shape::Box {
            lo: vec![0.0; 3],
            hi: vec![0.75, 0.5, 0.5],
        };
        let h = 0.25;
        let grid = Arc::new(build_grid(shape, h, 3).unwrap());
        assert_eq!(grid.len(), 2);
        let f = GreenField::from_values(grid, vec![0.0, 1.0], vec![0.25; 3], 1.5);
        let (beta, q) = (0.5, 1.2);
        let got = gagliardo_seminorm(&f, beta, q, 0.0).unwrap();
        let want = 2.0 * 0.5 * h.powi(6) / h.powf(3.0 + beta * q / 2.0);
        assert!((got - want).abs() < 1e-14 * want, "{got} {want}");
    }

    #[test]
    fn zero_field_has_zero_seminorm() {
        let mut f = synthetic(1.5, 0.25);
        f.values.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(gagliardo_seminorm(&f, 0.5, 1.2, 0.5).unwrap(), 0.0);
        assert!(gagliardo_seminorm(&f, 1.6, 1.2, 0.0).is_err());
        assert!(gagliardo_seminorm(&f, 0.5, 1.5, 0.0).is_err());
    }

    #[test]
    fn quasinorm_of_a_step() {
        // values 2 on one cell, 1 on three: sup is max(2·v^p, 1·(4v)^p)
        let v = weak_quasinorm(&[1.0, 2.0, 1.0, 1.0, 0.0], 0.5, 0.5);
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }
}
