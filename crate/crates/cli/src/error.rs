use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{} checks failed", .0.len())]
    ChecksFailed(Vec<String>),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 for configuration, 3 for numerical or invariant
    /// failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::ChecksFailed(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    /// Core errors raised while resolving a configuration.
    pub fn from_config(e: optomech_core::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Core errors raised during computation.
impl From<optomech_core::Error> for CliError {
    fn from(e: optomech_core::Error) -> Self {
        match e {
            optomech_core::Error::Parameter(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
