use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// The variants map onto the experiment runner's exit-code classes:
/// `Domain` and `Config` are caller mistakes, the rest are numerical.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unusable configuration (empty grid, spacing mismatch, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Quadrature or linear algebra failed to produce a trustworthy number.
    #[error("numerical error: {message}")]
    Numeric {
        message: String,
        /// Refinement trace `(lo, hi, error estimate)` of the failing quadrature, if any.
        trace: Vec<(f64, f64, f64)>,
    },

    /// Iterative solver stopped at `max_iter` above tolerance.
    #[error(
        "solver did not converge in {iterations} iterations (relative residual {residual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// A solved Green field has entries below the roundoff allowance.
    #[error("green field negative beyond roundoff: min {min:.3e} < -{allowance:.3e}")]
    NegativeField { min: f64, allowance: f64 },

    /// Failure of one member of a parameter sweep.
    #[error("at alpha = {alpha}: {inner}")]
    AtAlpha { alpha: f64, inner: Box<Error> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric {
            message: msg.into(),
            trace: Vec::new(),
        }
    }

    /// Prefixes the message with `ctx`; structured variants pass through.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Numeric { message, trace } => Error::Numeric {
                message: format!("{ctx}: {message}"),
                trace,
            },
            other => other,
        }
    }

    /// The innermost error behind any sweep wrapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtAlpha { inner, .. } => inner.root(),
            other => other,
        }
    }

    /// True for caller-side mistakes (as opposed to numerical failures).
    pub fn is_configuration(&self) -> bool {
        matches!(self.root(), Error::Domain(_) | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
