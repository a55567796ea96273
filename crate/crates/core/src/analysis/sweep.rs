use super::{extract_constants, local_boundedness_ratio, multi_annulus_harnack, BoundReport};
use crate::error::{Error, Result};
use crate::kernel::{make_kernel, KernelFamily, KernelSpec};
use crate::lattice::{build_grid, Backend, Shape};
use crate::oracle::{near_diagonal_constant, oracle_field, BallGreenParams};
use crate::solve::{solve_point_source, GreenField, SolveConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepMode {
    /// Weights, operator and solve per exponent.
    Solve,
    /// Fields sampled from the closed-form ball Green function.
    Oracle,
}

/// One pipeline template; the kernel's exponent is replaced per sweep member.
#[derive(Debug, Clone)]
pub struct SweepProblem {
    pub kernel: KernelSpec,
    pub shape: Shape,
    pub h: f64,
    pub y0: Vec<f64>,
    pub rho: f64,
    /// Outer factor of the multi-annulus Harnack ratio; `None` skips it.
    pub harnack_m: Option<f64>,
    pub mode: SweepMode,
    pub backend: Backend,
}

impl SweepProblem {
    /// Isotropic stable kernel on the unit ball with source at the origin, `ρ = 2h`.
    pub fn unit_ball(dim: usize, h: f64, mode: SweepMode) -> Self {
        SweepProblem {
            kernel: KernelSpec::alpha_stable(1.5, dim),
            shape: Shape::unit_ball(dim),
            h,
            y0: vec![0.0; dim],
            rho: 2.0 * h,
            harnack_m: Some(4.0),
            mode,
            backend: Backend::Auto,
        }
    }

    /// Green field for exponent `alpha`.
    pub fn field(&self, alpha: f64, cfg: &SolveConfig) -> Result<GreenField> {
        let spec = self.kernel.with_alpha(alpha);
        match self.mode {
            SweepMode::Solve => {
                let k = make_kernel(spec)?;
                let op = crate::lattice::discretize(&k, self.shape.clone(), self.h, self.backend)?;
                solve_point_source(&op, &self.y0, self.rho, cfg)
            }
            SweepMode::Oracle => {
                let unit = matches!(&self.shape, Shape::Ball { center, radius }
                    if *radius == 1.0 && center.iter().all(|c| *c == 0.0));
                if !unit || !matches!(spec.family, KernelFamily::AlphaStable) {
                    return Err(Error::config(
                        "oracle mode needs the stable kernel on the unit ball at the origin",
                    ));
                }
                let grid = Arc::new(build_grid(self.shape.clone(), self.h, spec.dim)?);
                let params = BallGreenParams::new(spec.dim, alpha)?;
                let values = oracle_field(&grid, &self.y0, &params)?;
                Ok(GreenField::from_values(
                    grid,
                    values,
                    self.y0.clone(),
                    alpha,
                ))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessSweep {
    pub alphas: Vec<f64>,
    pub reports: Vec<BoundReport>,
    /// `max/min` of the upper constants.
    pub spread_upper: f64,
    pub spread_lower: f64,
    pub quasinorm_spread: f64,
    /// Limit coefficient `Γ((d-α)/2)/(2^α π^{d/2} Γ(α/2))` per exponent.
    pub limit_constants: Vec<f64>,
    /// Empirical local-boundedness constant per exponent, on `B_{dist/4}`
    /// centred at distance `dist/2` from the source.
    pub local_bound_constants: Vec<f64>,
    /// Fixed budget on the spreads; uniformity in α comes with no explicit number.
    pub spread_budget: f64,
}

impl RobustnessSweep {
    pub fn within_budget(&self) -> bool {
        self.spread_upper <= self.spread_budget && self.spread_lower <= self.spread_budget
    }
}

pub const SPREAD_BUDGET: f64 = 5.0;

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    hi / lo
}

fn run_one(
    problem: &SweepProblem,
    alpha: f64,
    cfg: &SolveConfig,
) -> Result<(BoundReport, f64, f64)> {
    let field = problem.field(alpha, cfg)?;
    let mut report = extract_constants(&field, &problem.y0)?;
    if let Some(m) = problem.harnack_m {
        report.harnack_multi = Some(multi_annulus_harnack(&field, &problem.y0, m, None)?);
    }
    let dist = problem
        .shape
        .boundary_distance(&problem.y0)
        .unwrap_or(f64::NAN);
    let mut x0 = problem.y0.clone();
    x0[0] += 0.5 * dist;
    let moser = local_boundedness_ratio(&field, &x0, 0.25 * dist, 1.0)?;
    let limit = near_diagonal_constant(problem.kernel.dim, alpha).unwrap_or(f64::NAN);
    Ok((report, limit, moser))
}

/// Full pipeline per exponent; members run concurrently, aggregation is ordered.
pub fn robustness_sweep(
    problem: &SweepProblem,
    alphas: &[f64],
    cfg: &SolveConfig,
) -> Result<RobustnessSweep> {
    if alphas.is_empty() {
        return Err(Error::config("sweep needs at least one exponent"));
    }
    if alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("sweep exponents must be strictly increasing"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a >= 1.0 && **a <= 1.999)) {
        return Err(Error::domain(format!(
            "sweep exponent {a} outside [1, 1.999]"
        )));
    }
    cfg.validate()?;
    let results: Vec<(BoundReport, f64, f64)> = alphas
        .par_iter()
        .map(|&alpha| {
            run_one(problem, alpha, cfg).map_err(|e| Error::AtAlpha {
                alpha,
                inner: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let reports: Vec<BoundReport> = results.iter().map(|r| r.0.clone()).collect();
    Ok(RobustnessSweep {
        alphas: alphas.to_vec(),
        spread_upper: spread(reports.iter().map(|r| r.c_upper)),
        spread_lower: spread(reports.iter().map(|r| r.c_lower)),
        quasinorm_spread: spread(reports.iter().map(|r| r.quasinorm)),
        limit_constants: results.iter().map(|r| r.1).collect(),
        local_bound_constants: results.iter().map(|r| r.2).collect(),
        reports,
        spread_budget: SPREAD_BUDGET,
    })
}
