use thiserror::Error;

/// Library-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Rejected input: precondition or parameter validation failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// File or stream contents do not match the expected format.
    #[error("format error: {0}")]
    Format(String),
    /// Metadata of two artifacts disagrees (e.g. batch vs layout).
    #[error("metadata mismatch: {0}")]
    Mismatch(String),
    /// Requested allocation or shot count exceeds addressable memory.
    #[error("size overflow: {0}")]
    Size(String),
    /// Numerical failure (non-finite loss, degenerate fit).
    #[error("numerical error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
