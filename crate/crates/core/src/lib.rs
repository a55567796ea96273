//! Lattice construction and verification of Green functions for symmetric
//! nonlocal operators of fractional order on bounded domains.

// `!(a > b)` is the NaN-rejecting form throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod inequalities;
pub mod kernel;
pub mod lattice;
pub mod oracle;
pub mod quadrature;
pub mod solve;
pub mod special;

pub use error::{Error, Result};
