use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (Cholesky factorization failed)")]
    NotPositiveDefinite,

    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation interval has numerically zero probability mass")]
    DegenerateInterval,

    #[error("inverse covariance is not diagonally dominant (modulus {modulus:.6} in row {worst_row})")]
    NotDominant { modulus: f64, worst_row: usize },

    #[error("solver trace has {iterates} iterates, at least 3 are needed")]
    InsufficientTrace { iterates: usize },

    #[error("quadrature oracle supports at most 3 dimensions, got {0}")]
    DimensionTooLarge(usize),

    #[error("quadrature did not converge: grid refinement changed the mean by {disagreement:e}")]
    NotConverged { disagreement: f64 },

    #[error("rejection acceptance rate {rate:e} is too low after {proposals} proposals")]
    AcceptanceTooLow { rate: f64, proposals: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
