use thiserror::Error;

/// Errors raised by the transfer engine.
///
/// Verification failures are not errors: they are recorded in a
/// [`ValidationReport`](crate::report::ValidationReport).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed input: mismatched dimensions, bases or windows.
    #[error("structural error: {0}")]
    Structural(String),
    /// An operation was called outside its domain.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A state that the mathematics rules out was reached.
    #[error("internal consistency error: {0}")]
    Internal(String),
    /// A perturbation series failed to terminate within its proven bound.
    #[error("perturbation series did not terminate after {steps} steps")]
    Divergence { steps: usize },
    /// Problem file could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

pub(crate) fn internal(msg: impl Into<String>) -> Error {
    Error::Internal(msg.into())
}
