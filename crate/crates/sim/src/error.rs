use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] kyle_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{diverged} of {total} runs diverged")]
    Diverged { diverged: usize, total: usize },
}

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        SimError::Csv {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::Config(_) => "config",
            SimError::Model(_) => "model",
            SimError::Io { .. } => "io",
            SimError::Csv { .. } => "csv",
            SimError::Diverged { .. } => "divergence",
        }
    }

    /// Process exit code: 2 for divergence-dominated runs, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            SimError::Diverged { .. } => 2,
            _ => 1,
        }
    }
}
