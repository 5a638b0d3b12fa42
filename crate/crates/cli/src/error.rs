use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

/// Failures mapped onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed configuration, CSV or arguments. Exit 2.
    #[error("{0}")]
    Input(String),
    /// File could not be read or written. Exit 3.
    #[error("{0}")]
    Io(String),
    /// The pipeline ran but could not produce an estimate. Exit 4.
    #[error("{0}")]
    Estimation(mlnd_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 3,
            CliError::Estimation(_) => 4,
        })
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// Sorts a library error: bad arguments are input errors, the rest are
    /// estimation errors.
    pub fn from_core(err: mlnd_core::Error) -> Self {
        match err.root() {
            mlnd_core::Error::InvalidArgument(_) => CliError::Input(err.to_string()),
            _ => CliError::Estimation(err),
        }
    }
}

impl From<mlnd_core::Error> for CliError {
    fn from(err: mlnd_core::Error) -> Self {
        CliError::from_core(err)
    }
}
