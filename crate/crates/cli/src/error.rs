use std::fmt;

use conclab_core::Error as CoreError;

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration: exit 2.
    Config(String),
    /// Enumeration or memory capacity exceeded, or a constant could not be fitted: exit 3.
    Capacity(String),
    /// Filesystem failure: exit 1.
    Io(String),
    /// An inequality check or an integrity check did not hold: exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Capacity(m) => write!(f, "capacity or fit failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Failed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Input(_) | CoreError::Domain(_) => CliError::Config(e.to_string()),
            CoreError::Capacity(_) | CoreError::FitFailure(_) | CoreError::Replicate { .. } => CliError::Capacity(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
