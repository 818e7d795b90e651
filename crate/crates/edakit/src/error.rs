//! Crate-wide error type.

use thiserror::Error;

/// Unified error for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector lengths or sample rates do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An operation received an empty vector it cannot act on.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Downsampling requires the source rate to be an integer multiple
    /// of the target rate.
    #[error("non-integer decimation ratio: {source_hz} Hz -> {target_hz} Hz")]
    NonIntegerRatio { source_hz: f64, target_hz: f64 },

    /// A declared sparse vector deviates from its sparsity budget.
    #[error("sparsity budget violated: {0}")]
    SparsityBudget(String),

    /// A dictionary column has zero norm, so coherence is undefined.
    #[error("dictionary column {index} has zero norm")]
    ZeroColumn { index: usize },

    /// Relative error against an identically zero reference is undefined.
    #[error("reference vector is identically zero")]
    ZeroTruth,

    /// ROC analysis needs at least one positive and one negative label.
    #[error("degenerate labels: need at least one of each class")]
    DegenerateLabels,

    /// A detection window is malformed or incompatible with the signal.
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    /// A text file does not parse as the expected format.
    #[error("malformed input at {path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
