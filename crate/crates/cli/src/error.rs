use std::io;
use std::path::{Path, PathBuf};

use biomeval::dataset::DatasetError;
use biomeval::evaluation::EvaluationError;
use biomeval::simulator::SimulationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub const VALIDATION: u8 = 1;
    pub const IO: u8 = 2;
    pub const INTERNAL: u8 = 3;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => Self::VALIDATION,
            CliError::Io { .. } => Self::IO,
            CliError::Internal(_) => Self::INTERNAL,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Missing or unreadable files are I/O failures; anything wrong with
    /// their contents is a validation failure.
    pub fn dataset(path: &Path, e: DatasetError) -> Self {
        match e {
            DatasetError::MissingFile(p) => CliError::Io {
                path: p,
                source: io::Error::new(io::ErrorKind::NotFound, "no such file"),
            },
            DatasetError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Validation(format!("{}: {other}", path.display())),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Internal(e.to_string())
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        CliError::Validation(e.to_string())
    }
}
