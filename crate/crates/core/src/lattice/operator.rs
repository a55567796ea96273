use super::convolution::ConvolutionPlan;
use super::grid::GridDomain;
use super::weights::StencilWeights;
use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, KernelInstance};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::sync::Arc;

/// Largest grid assembled densely by default.
pub const DENSE_LIMIT: usize = 3000;
/// Largest grid for the bounded-coefficient family, which is always dense.
pub const COEFFICIENT_LIMIT: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Auto,
    Dense,
    Fft,
}

#[derive(Debug, Clone)]
enum Action {
    /// Row-major off-diagonal couplings `W_ij`, zero diagonal.
    Dense(Arc<Vec<f64>>),
    Fft(Arc<ConvolutionPlan>),
}

/// `(Au)_i = κ_i u_i + Σ_j W_ij (u_i - u_j)`, scaled by `scale`.
///
/// `W_ij = w_total(x_j - x_i)` (times `a(x_i, x_j)` for the bounded-coefficient
/// family), `κ_i` collects the couplings to exterior lattice points and the
/// truncated tail, so `A·1 = κ` and `A` is a symmetric M-matrix.
#[derive(Debug, Clone)]
pub struct NonlocalOperator {
    pub grid: Arc<GridDomain>,
    pub weights: Arc<StencilWeights>,
    pub kappa: Vec<f64>,
    /// `s_i = Σ_j W_ij`, computed by the same arithmetic as the coupling sum.
    row_sum: Vec<f64>,
    action: Action,
    scale: f64,
}

pub fn assemble_operator(
    grid: Arc<GridDomain>,
    weights: Arc<StencilWeights>,
    k: &KernelInstance,
) -> Result<NonlocalOperator> {
    assemble_operator_with(grid, weights, k, Backend::Auto)
}

pub fn assemble_operator_with(
    grid: Arc<GridDomain>,
    weights: Arc<StencilWeights>,
    k: &KernelInstance,
    backend: Backend,
) -> Result<NonlocalOperator> {
    if (grid.h - weights.h).abs() > 1e-12 * grid.h || grid.dim != weights.dim {
        return Err(Error::config(format!(
            "grid spacing {} / dimension {} does not match stencil spacing {} / dimension {}",
            grid.h, grid.dim, weights.h, weights.dim
        )));
    }
    if k.dim() != grid.dim || (k.alpha() - weights.alpha).abs() > 0.0 {
        return Err(Error::config("kernel does not match the stencil"));
    }
    let n = grid.len();
    let coefficient = matches!(k.family(), KernelFamily::BoundedCoeff { .. });
    let backend = match backend {
        Backend::Auto if coefficient || n <= DENSE_LIMIT => Backend::Dense,
        Backend::Auto => Backend::Fft,
        b => b,
    };
    if coefficient {
        if backend == Backend::Fft {
            return Err(Error::config(
                "the bounded-coefficient operator has no convolution form",
            ));
        }
        if n > COEFFICIENT_LIMIT {
            return Err(Error::config(format!(
                "bounded-coefficient operator is dense and limited to {COEFFICIENT_LIMIT} nodes, grid has {n}"
            )));
        }
    }
    let points = grid.points();
    let pair = |i: usize, y: &[f64]| {
        if coefficient {
            k.coefficient(&points[i], y)
        } else {
            1.0
        }
    };

    let kappa: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            let xi = &points[i];
            let mut y = vec![0.0; grid.dim];
            for o in 0..weights.len() {
                let z = weights.offset(o);
                if grid.shifted(i, z).is_none() {
                    let w = weights.total(z);
                    if coefficient {
                        for c in 0..grid.dim {
                            y[c] = xi[c] + z[c] as f64 * grid.h;
                        }
                        acc += w * pair(i, &y);
                    } else {
                        acc += w;
                    }
                }
            }
            // tail beyond the stencil; coefficient frozen at the diagonal
            acc + weights.tail_constant * if coefficient { pair(i, xi) } else { 1.0 }
        })
        .collect();

    let (action, row_sum) = match backend {
        Backend::Dense => {
            let mut w = vec![0.0; n * n];
            w.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let ci = grid.cell(i);
                let mut z = vec![0i32; grid.dim];
                for (j, slot) in row.iter_mut().enumerate() {
                    if i == j {
                        continue;
                    }
                    let cj = grid.cell(j);
                    for c in 0..grid.dim {
                        z[c] = (cj[c] - ci[c]) as i32;
                    }
                    let v = weights.total(&z);
                    if v != 0.0 {
                        *slot = v * pair(i, &points[j]);
                    }
                }
            });
            if coefficient {
                // enforce exact symmetry against rounding in user coefficients
                for i in 0..n {
                    for j in 0..i {
                        let avg = 0.5 * (w[i * n + j] + w[j * n + i]);
                        w[i * n + j] = avg;
                        w[j * n + i] = avg;
                    }
                }
            }
            let ones = vec![1.0; n];
            let s = dense_product(&w, &ones);
            (Action::Dense(Arc::new(w)), s)
        }
        Backend::Fft => {
            let plan = ConvolutionPlan::new(&grid, &weights);
            let s = plan.convolve(&vec![1.0; n]);
            (Action::Fft(Arc::new(plan)), s)
        }
        Backend::Auto => unreachable!(),
    };
    Ok(NonlocalOperator {
        grid,
        weights,
        kappa,
        row_sum,
        action,
        scale: 1.0,
    })
}

fn dense_product(w: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    w.par_chunks(n)
        .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
        .collect()
}

impl NonlocalOperator {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.action, Action::Dense(_))
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if u.len() != n {
            return Err(Error::config(format!(
                "vector length {} does not match {n} nodes",
                u.len()
            )));
        }
        let coupled = match &self.action {
            Action::Dense(w) => dense_product(w, u),
            Action::Fft(plan) => plan.convolve(u),
        };
        Ok((0..n)
            .map(|i| self.scale * ((self.kappa[i] + self.row_sum[i]) * u[i] - coupled[i]))
            .collect())
    }

    /// The equivalent of `A·1`: `scale·κ`.
    pub fn killing(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| self.scale * k).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.kappa
            .iter()
            .zip(&self.row_sum)
            .map(|(k, s)| self.scale * (k + s))
            .collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        NonlocalOperator {
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    /// Explicit matrix; limited to `DENSE_LIMIT` nodes unless already dense.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let d = self.diagonal();
        match &self.action {
            Action::Dense(w) => Ok(DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    d[i]
                } else {
                    -self.scale * w[i * n + j]
                }
            })),
            Action::Fft(_) => {
                if n > DENSE_LIMIT {
                    return Err(Error::config(format!(
                        "dense form limited to {DENSE_LIMIT} nodes, grid has {n}"
                    )));
                }
                let g = &self.grid;
                Ok(DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        return d[i];
                    }
                    let z: Vec<i32> = g
                        .cell(j)
                        .iter()
                        .zip(g.cell(i))
                        .map(|(a, b)| (a - b) as i32)
                        .collect();
                    -self.scale * self.weights.total(&z)
                }))
            }
        }
    }
}

/// Smallest `c` with `A ⪰ c·B` in quadratic-form order on this grid: the
/// least generalized eigenvalue of the pencil `(A, B)`.
pub fn discrete_comparability(op: &NonlocalOperator, reference: &NonlocalOperator) -> Result<f64> {
    if op.len() != reference.len() || op.grid.h != reference.grid.h {
        return Err(Error::config("operators live on different grids"));
    }
    if op.len() > DENSE_LIMIT {
        return Err(Error::config(format!(
            "comparability needs at most {DENSE_LIMIT} nodes"
        )));
    }
    let a = op.to_dense()?;
    let b = reference.to_dense()?;
    let chol = b
        .cholesky()
        .ok_or_else(|| Error::numeric("reference operator is singular or indefinite"))?;
    let l = chol.l();
    let li = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numeric("reference operator is singular"))?;
    let c = &li * a * li.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = c.symmetric_eigenvalues();
    Ok(eig.iter().cloned().fold(f64::INFINITY, f64::min))
}
