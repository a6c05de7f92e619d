//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by solver and factory routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A precondition on the inputs was violated (dimensions, ranges,
    /// non-finite entries, malformed parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical routine produced non-finite values mid-run.
    #[error("numerical failure at iteration {iteration}: {message}")]
    NumericalFailure { iteration: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
