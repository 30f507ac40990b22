//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation and compilation layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not hermitian (max |M - M^dag| = {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },

    #[error("matrix is not unitary (max |M^dag M - I| = {max_dev:.3e})")]
    NotUnitary { max_dev: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error(
        "step refinement exhausted at t = {time:.6e}: \
         residual {achieved:.3e} above tolerance {target:.3e} \
         after {refinements} refinements"
    )]
    RefinementExhausted {
        time: f64,
        achieved: f64,
        target: f64,
        refinements: u32,
    },

    #[error("infeasible compile target: {constraint} = {value:.6e} violates bound {bound:.6e}")]
    Infeasible {
        constraint: String,
        value: f64,
        bound: f64,
    },

    #[error("dense operation on dimension {dim} exceeds the dense limit {limit}")]
    TooLargeForDense { dim: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim_mismatch(context: &str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.to_owned(),
            expected,
            got,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
