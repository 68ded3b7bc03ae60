use std::process::ExitCode;

use thiserror::Error;

/// Failures of a command, each tied to one process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent input (exit 1).
    #[error("{0}")]
    Input(String),
    /// The decomposition has no finite condition number (exit 2).
    #[error("ill-posed: {0}")]
    IllPosed(String),
    /// A check performed by the command did not hold (exit 3).
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) => 1,
            CliError::IllPosed(_) => 2,
            CliError::Verification(_) => 3,
        })
    }
}

impl From<sbtd::Error> for CliError {
    fn from(e: sbtd::Error) -> Self {
        match e {
            sbtd::Error::IllPosed(s) => CliError::IllPosed(format!("σ_min = {s:e}")),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
