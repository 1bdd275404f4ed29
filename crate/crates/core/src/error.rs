use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input with no usable content (empty audio, too few samples, no groups).
    #[error("empty input: {0}")]
    EmptyInput(String),
    /// File exists but its encoding is not supported.
    #[error("format error: {0}")]
    Format(String),
    /// Mismatched matrix or vector dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Semantically invalid data (malformed rows, missing scores).
    #[error("data error: {0}")]
    Data(String),
    /// Not enough entries to fill a sampling quota.
    #[error("quota error: group '{group}' has {available} entries, {requested} requested")]
    Quota {
        group: String,
        available: usize,
        requested: usize,
    },
    /// Unknown front-end or invalid configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Non-finite loss or value during an iterative procedure.
    #[error("numeric failure at step {step}: {message}")]
    Numeric { step: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
