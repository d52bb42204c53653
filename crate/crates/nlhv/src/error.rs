use std::io;

use nlhv_core::Error as CoreError;

use crate::config::ConfigError;

/// Failures mapped onto the documented exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numeric abort: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Numeric(_) => 2,
            Self::Io(_) => 3,
        }
    }

    /// Classifies a core error: bad inputs are usage errors, everything that
    /// went wrong while computing is a numeric abort.
    pub fn from_core(context: &str, e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter { .. }
            | CoreError::Shape(_)
            | CoreError::Domain(_)
            | CoreError::GridMismatch(_) => Self::Usage(format!("{context}: {e}")),
            _ => Self::Numeric(format!("{context}: {e}")),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
