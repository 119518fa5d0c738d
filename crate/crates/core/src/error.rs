use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lag {lag} must be smaller than series length {len}")]
    LagTooLarge { lag: usize, len: usize },

    #[error("column `{0}` has zero variance")]
    ConstantColumn(String),

    #[error("non-positive value {value} at row {row}, column `{column}`")]
    NonPositive { row: usize, column: String, value: f64 },

    #[error("malformed dissimilarity matrix: {0}")]
    MalformedMatrix(String),

    #[error("malformed panel: {0}")]
    MalformedPanel(String),

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("AR polynomial is not causal (companion spectral radius {0:.6})")]
    NonCausal(f64),

    #[error("numerically singular Durbin-Levinson step at lag {0}")]
    SingularRecursion(usize),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
