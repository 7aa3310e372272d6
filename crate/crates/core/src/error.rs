use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    /// Event does not satisfy the requirements for flattening.
    #[error("selection error: {0}")]
    Selection(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Covariance (or similar) matrix carries no usable rank.
    #[error("rank error: {0}")]
    Rank(String),

    #[error("{what} did not converge within {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("local Gram matrix of sample {index} is singular after regularisation")]
    DegenerateNeighborhood { index: usize },

    #[error("negative input at row {row}, column {col}")]
    NegativeInput { row: usize, col: usize },

    #[error("training diverged at epoch {epoch}: non-finite {what}")]
    Divergence { epoch: usize, what: &'static str },

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("value {value} at position {index} is outside [0, 1]")]
    Range { index: usize, value: f64 },

    /// Only one class present where two are required.
    #[error("labels contain a single class")]
    DegenerateLabels,

    #[error("SMO solver stalled after {iterations} iterations")]
    SolverStall { iterations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed serialized blob.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl Into<String>, found: impl Into<String>) -> Error {
    Error::Shape {
        expected: expected.into(),
        found: found.into(),
    }
}
