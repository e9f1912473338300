use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] dissipative_core::Error),

    #[error("{failed} of {total} points failed (limit is 10%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("interrupted after {done} of {total} points; partial results kept")]
    Interrupted { done: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// 1 for invalid input and runtime errors, 2 when too many sweep points
    /// failed.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::TooManyFailures { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
