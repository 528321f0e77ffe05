use std::path::PathBuf;

use thiserror::Error;

/// Exit code for invalid input or configuration.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit code for failures while running (I/O, numerical trouble).
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

impl From<dyngem::Error> for CliError {
    fn from(e: dyngem::Error) -> Self {
        use dyngem::Error as E;
        match e {
            E::Config(_)
            | E::Parse { .. }
            | E::IndexOutOfRange { .. }
            | E::Dimension(_)
            | E::EmptyGraph => CliError::Validation(e.to_string()),
            E::UndefinedMetric(_) | E::Numerical(_) | E::Io { .. } => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a path to csv/json/io failures.
pub trait Context<T> {
    fn at(self, path: impl Into<PathBuf>) -> CliResult<T>;
}

impl<T, E: std::fmt::Display> Context<T> for Result<T, E> {
    fn at(self, path: impl Into<PathBuf>) -> CliResult<T> {
        self.map_err(|e| CliError::io(&path.into(), e))
    }
}
