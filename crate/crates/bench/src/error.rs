use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Schema or value error; `path` is the offending field, dotted.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Engine(#[from] pearl_lab::Error),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl BenchError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for failed checks, 2 for bad configuration or input, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ChecksFailed { .. } => 1,
            Self::Config { .. } | Self::Engine(_) => 2,
            Self::Io { .. } => 3,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
