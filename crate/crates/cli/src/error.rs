use std::path::Path;

use concept_fusion::Error as CoreError;
use thiserror::Error;

/// Command failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Exit code 1.
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
        }
    }

    pub fn data_at(path: &Path, msg: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {msg}", path.display()))
    }

    pub fn config_at(path: &Path, msg: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {msg}", path.display()))
    }
}

/// Settings that can only be fixed by editing the config count as config
/// errors; everything else is a data error.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::BadK(_) | CoreError::InvalidHyperparameter(_) | CoreError::BadSpec(_) | CoreError::UnknownGroupName(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
