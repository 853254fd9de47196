use thiserror::Error;

/// Failure classes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed arguments: wrong lengths, non-finite entries, out-of-range parameters.
    #[error("input error: {0}")]
    Input(String),
    /// Mathematically inadmissible argument (non-PSD matrix, divergent Orlicz norm, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Exact enumeration would exceed the configured capacity.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// No constant in the search interval satisfies the domination constraint.
    #[error("fit failure: {0}")]
    FitFailure(String),
    /// A Monte Carlo replicate produced a non-finite value.
    #[error("replicate {index} failed: {message}")]
    Replicate { index: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn capacity<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Capacity(msg.into()))
}
