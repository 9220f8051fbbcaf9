use thiserror::Error;

use crate::parisi::{OrderParameter, PositiveTempOrderParameter};

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("order parameter outside the admissible cone: {0}")]
    OutsideCone(String),

    #[error("zero-temperature solver did not converge after {iterations} iterations (projected gradient {residual:.3e})")]
    SolverNotConverged {
        best: Box<OrderParameter>,
        iterations: usize,
        residual: f64,
    },

    #[error("positive-temperature solver did not converge after {iterations} iterations (projected gradient {residual:.3e})")]
    CsNotConverged {
        best: Box<PositiveTempOrderParameter>,
        iterations: usize,
        residual: f64,
    },

    #[error("capacity exceeded: degree {degree} needs {entries} tensor entries, budget is {budget}")]
    Capacity { degree: u32, entries: u128, budget: u128 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("unstable step size: {0}")]
    Unstable(String),

    #[error("tensor dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
