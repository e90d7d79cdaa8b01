use thiserror::Error;

/// Errors raised by the protocol laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration or call argument violates its contract.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// An evaluation or decode would exceed its configured budget.
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    /// A serialized access map could not be read.
    #[error("malformed access map at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
