//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library.  The CLI maps these onto process exit
/// codes (invalid arguments → 2, malformed data → 3, divergence → 4).
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A file or stream does not match the expected format.
    #[error("data format: {0}")]
    DataFormat(String),

    /// Training left the numerically sane regime (non-finite or huge loss).
    #[error("numerical divergence: {0}")]
    Divergence(String),

    /// Procedural generation could not satisfy its contract.
    #[error("generation: {0}")]
    Generation(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::DataFormat(msg.into())
    }
}
