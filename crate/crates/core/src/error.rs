use thiserror::Error;

/// Errors raised by the solver, the HPE engine and the verification layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("quadratic form is negative ({value:e}) on a supposedly PSD operator")]
    NegativeQuadraticForm { value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unsupported subproblem configuration: {0}")]
    UnsupportedSubproblem(String),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("pointwise bound undefined for sigma = {sigma} (requires sigma < 1)")]
    SigmaNotBelowOne { sigma: f64 },
    #[error("ergodic bound undefined before any step was accumulated")]
    EmptyAccumulator,
    #[error("reference solution not reached: kkt residual {residual:e} after {iterations} iterations")]
    ReferenceNotReached { residual: f64, iterations: usize },
    #[error("problem generation failed: {0}")]
    Generation(String),
    #[error("internal consistency violated: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
