//! Preconditioned conjugate gradients for the regularised Green problem.

use crate::error::{Error, Result};
use crate::lattice::{GridDomain, NonlocalOperator};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Preconditioner {
    None,
    #[default]
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_iter: 5000,
            preconditioner: Preconditioner::Diagonal,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-4) {
            return Err(Error::config(format!(
                "solver tolerance must lie in (0, 1e-4], got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Discrete regularised Green function `G_ρ(·, y₀)` on the grid nodes.
#[derive(Debug, Clone)]
pub struct GreenField {
    pub grid: Arc<GridDomain>,
    pub values: Vec<f64>,
    pub y0: Vec<f64>,
    pub rho: f64,
    pub alpha: f64,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

impl GreenField {
    /// Field from given node values (synthetic or oracle-sampled).
    pub fn from_values(grid: Arc<GridDomain>, values: Vec<f64>, y0: Vec<f64>, alpha: f64) -> Self {
        GreenField {
            grid,
            values,
            y0,
            rho: 0.0,
            alpha,
            residual: 0.0,
            iterations: 0,
            history: Vec::new(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Uniform probability on the open ball `B_ρ(y₀)` as node masses summing to 1.
pub fn regularized_rhs(grid: &GridDomain, y0: &[f64], rho: f64) -> Result<Vec<f64>> {
    if y0.len() != grid.dim {
        return Err(Error::config(
            "source point dimension does not match the grid",
        ));
    }
    if !(rho >= grid.h * (1.0 - 1e-12)) {
        return Err(Error::config(format!(
            "rho = {rho} is below the lattice spacing h = {}; use rho ≥ h",
            grid.h
        )));
    }
    if let Some(d) = grid.shape.boundary_distance(y0) {
        if rho > d * (1.0 + 1e-12) || !grid.contains(y0) {
            return Err(Error::config(format!(
                "B_rho(y0) must lie inside the domain (rho = {rho}, distance {d})"
            )));
        }
    }
    let r2 = rho * rho * (1.0 - 1e-12);
    let inside: Vec<bool> = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            p.iter()
                .zip(y0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                < r2
        })
        .collect();
    let count = inside.iter().filter(|v| **v).count();
    if count == 0 {
        return Err(Error::config(format!(
            "no node lies in B_rho(y0) with rho = {rho}; use rho ≥ h"
        )));
    }
    let mass = 1.0 / count as f64;
    Ok(inside
        .into_iter()
        .map(|v| if v { mass } else { 0.0 })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `h^d A g = rhs`, i.e. the Galerkin system for the source measure
/// `rhs`, so that `g` approximates the Green function pointwise.
pub fn solve_green(op: &NonlocalOperator, rhs: &[f64], cfg: &SolveConfig) -> Result<GreenField> {
    cfg.validate()?;
    let n = op.len();
    if rhs.len() != n {
        return Err(Error::config(format!(
            "rhs length {} does not match {n} nodes",
            rhs.len()
        )));
    }
    let grid = op.grid.clone();
    let cell = grid.h.powi(grid.dim as i32);
    let b: Vec<f64> = rhs.iter().map(|v| v / cell).collect();
    let (g, residual, history) = conjugate_gradient(op, &b, cfg)?;
    let gmax = g.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
    let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let allowance = 10.0 * cfg.tol * gmax;
    if gmin < -allowance {
        return Err(Error::NegativeField {
            min: gmin,
            allowance,
        });
    }
    let y0 = centroid(&grid, rhs);
    Ok(GreenField {
        grid,
        values: g,
        y0,
        rho: 0.0,
        alpha: op.weights.alpha,
        residual,
        iterations: history.len().saturating_sub(1),
        history,
    })
}

fn centroid(grid: &GridDomain, mass: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; grid.dim];
    let total: f64 = mass.iter().sum();
    for (i, m) in mass.iter().enumerate() {
        if *m != 0.0 {
            for (ck, p) in c.iter_mut().zip(grid.point(i)) {
                *ck += m * p;
            }
        }
    }
    c.iter_mut().for_each(|v| *v /= total);
    c
}

/// Regularised Green function with source `B_ρ(y₀)`.
pub fn solve_point_source(
    op: &NonlocalOperator,
    y0: &[f64],
    rho: f64,
    cfg: &SolveConfig,
) -> Result<GreenField> {
    let rhs = regularized_rhs(&op.grid, y0, rho)?;
    let mut field = solve_green(op, &rhs, cfg)?;
    field.y0 = y0.to_vec();
    field.rho = rho;
    Ok(field)
}

/// Returns `(x, residual, history)`; history holds the relative residual per iteration.
pub fn conjugate_gradient(
    op: &NonlocalOperator,
    b: &[f64],
    cfg: &SolveConfig,
) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0.0, vec![0.0]));
    }
    let inv_diag: Vec<f64> = match cfg.preconditioner {
        Preconditioner::Diagonal => op.diagonal().iter().map(|d| 1.0 / d).collect(),
        Preconditioner::None => vec![1.0; n],
    };
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    for _ in 0..cfg.max_iter {
        let ap = op.apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::numeric(format!(
                "operator is not positive definite (pᵀAp = {pap:e})"
            )));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        history.push(rel);
        if rel <= cfg.tol {
            // confirm against the true residual to rule out drift
            let ax = op.apply(&x)?;
            let true_rel = ax
                .iter()
                .zip(b)
                .map(|(a, c)| (c - a) * (c - a))
                .sum::<f64>()
                .sqrt()
                / bnorm;
            if true_rel <= cfg.tol {
                return Ok((x, true_rel, history));
            }
            r = b.iter().zip(&ax).map(|(c, a)| c - a).collect();
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = *history.last().unwrap();
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
        history,
    })
}

/// `(G_ρ(x; y), G_ρ(y; x))`, each the field of one source averaged over the
/// other source's ball, from two independent solves.
pub fn green_pair(
    op: &NonlocalOperator,
    x: &[f64],
    y: &[f64],
    rho: f64,
    cfg: &SolveConfig,
) -> Result<(f64, f64)> {
    if x == y {
        return Err(Error::domain("green_pair needs distinct points"));
    }
    let rx = regularized_rhs(&op.grid, x, rho)?;
    let ry = regularized_rhs(&op.grid, y, rho)?;
    let gy = solve_green(op, &ry, cfg)?;
    let gx = solve_green(op, &rx, cfg)?;
    Ok((dot(&gy.values, &rx), dot(&gx.values, &ry)))
}
