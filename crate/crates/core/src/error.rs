use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("matrix is not symmetric (entry ({row}, {col}) differs by {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("inner subproblem solver did not converge within {iterations} iterations")]
    InnerNoConvergence { iterations: usize },

    #[error("no closed-form proximity operator for objective: {0}")]
    UnsupportedObjective(String),

    #[error("unsupported objective/set combination: {0}")]
    UnsupportedCombination(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("history too short: need {needed} iterates, have {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("a reference solution is required")]
    MissingReference,

    #[error("invalid instance dimensions: {0}")]
    InvalidDims(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("schema error: {0}")]
    Schema(String),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { context, expected, got }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
