use thiserror::Error;

use pareto_precoding::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed files, inconsistent dimensions.
    #[error("{0}")]
    Input(String),
    /// The computation itself failed.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io { .. }
            | CoreError::Json { .. }
            | CoreError::InvalidChannel(_)
            | CoreError::InvalidPrecoder(_)
            | CoreError::InvalidWeights(_)
            | CoreError::DimensionMismatch(_) => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
