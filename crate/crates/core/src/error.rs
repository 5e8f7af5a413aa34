use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data, reported with the offending line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Two inputs that must be distinct collide (e.g. duplicate canonical sequences).
    #[error("conflict: {0}")]
    Conflict(String),

    /// A caller violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Input data is structurally valid but unusable for the requested operation.
    #[error("data error: {0}")]
    Data(String),

    /// A computation is numerically undefined or failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
