//! Uniform-lattice discretisation of the Dirichlet form with zero exterior data.

mod convolution;
mod grid;
mod operator;
mod weights;

pub use grid::{build_grid, GridDomain, Shape};
pub use operator::{
    assemble_operator, assemble_operator_with, discrete_comparability, Backend, NonlocalOperator,
    COEFFICIENT_LIMIT, DENSE_LIMIT,
};
pub use weights::{quadrature_weights, StencilWeights};

use crate::error::Result;
use crate::kernel::KernelInstance;
use std::sync::Arc;

/// Default truncation radius `diam(Ω) + 2h`.
pub fn default_truncation(grid: &GridDomain) -> f64 {
    grid.diameter() + 2.0 * grid.h
}

/// Grid, weights and operator in one step with the default truncation.
pub fn discretize(
    k: &KernelInstance,
    shape: Shape,
    h: f64,
    backend: Backend,
) -> Result<NonlocalOperator> {
    let grid = Arc::new(build_grid(shape, h, k.dim())?);
    let weights = Arc::new(quadrature_weights(k, h, default_truncation(&grid))?);
    assemble_operator_with(grid, weights, k, backend)
}
