//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors surfaced by oracles, estimators, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector had the wrong length for the oracle or term it was passed to.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An oracle produced, or was handed, a non-finite value.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    /// An operation needs a capability the object does not have.
    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),

    /// Invalid argument or configuration value.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No sampling radius on the search grid satisfies the accuracy
    /// requirements; a higher smoothness order is needed.
    #[error(
        "no feasible sampling radius above {floor:e} for j={j}; \
         increase the smoothness order or relax the tolerance"
    )]
    InfeasibleTolerance { j: u32, floor: f64 },

    /// Instance generation failed (e.g. rank-deficient constraint matrix
    /// after retries).
    #[error("problem generation failed: {0}")]
    Generation(String),

    /// Malformed data file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// I/O error while reading or writing artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Serialization error for instance files.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
