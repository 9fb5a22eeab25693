use std::path::PathBuf;

use thiserror::Error;

/// Failure of a CLI command, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or malformed input files.
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Numerical(fracfit::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<fracfit::Error> for CliError {
    fn from(e: fracfit::Error) -> Self {
        match e {
            fracfit::Error::Usage(msg) => CliError::Input(msg),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
