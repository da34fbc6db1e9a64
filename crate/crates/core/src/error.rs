use std::io;

/// Errors raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad arguments: dimension mismatches, invalid specs, malformed configs.
    #[error("{0}")]
    Usage(String),
    /// An iterative kernel failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A size guard was exceeded; the caller should switch to a cheaper variant.
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
