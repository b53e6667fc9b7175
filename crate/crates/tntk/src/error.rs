//! Crate-wide error type.

use core::fmt;

/// Errors surfaced by the numeric routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands disagree on a dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// The Jacobi sweep budget was exhausted; carries the remaining
    /// off-diagonal mass for diagnosis.
    EighDidNotConverge { off_diagonal: f64 },
    /// Cholesky hit a non-positive pivot even after the jitter was added.
    NotPositiveDefinite { pivot: usize },
    /// A kernel or model specification is out of its admissible range.
    InvalidSpec(&'static str),
    /// Gradient descent exceeded the divergence threshold.
    Diverged { step: usize, loss: f64, initial_loss: f64 },
    /// Not enough samples for the requested split or fit.
    InsufficientSamples { need: usize, have: usize },
    /// Catch-all for invalid arguments with a static description.
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::EighDidNotConverge { off_diagonal } => write!(
                f,
                "jacobi eigensolver did not converge: off-diagonal residual {off_diagonal:e}"
            ),
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "matrix is not positive definite: pivot {pivot} <= 0 after jitter")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid kernel spec: {msg}"),
            Error::Diverged { step, loss, initial_loss } => write!(
                f,
                "training diverged at step {step}: loss {loss:e} exceeds 1e6 x initial {initial_loss:e}"
            ),
            Error::InsufficientSamples { need, have } => {
                write!(f, "insufficient samples: need {need}, have {have}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
