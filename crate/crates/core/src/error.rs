use thiserror::Error;

/// Errors raised by the solvers and the input layer.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("map B_{index} is not surjective (rank {rank} < {rows})")]
    NonSurjectiveMap {
        index: usize,
        rank: usize,
        rows: usize,
    },

    #[error("pushforward B_{index} K B_{index}^T is singular")]
    SingularPushforward { index: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("divergence detected: distance {distance:.3e} from the starting point")]
    DivergenceDetected { distance: f64 },

    #[error("entropy unstable under support truncation (change {change:.3e})")]
    UnstableTail { change: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
