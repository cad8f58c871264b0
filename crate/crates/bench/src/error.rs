use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] pvrl_core::Error),
    #[error(transparent)]
    Agent(#[from] pvrl_agent::AgentError),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("metrics line {line}: {msg}")]
    Metrics { line: usize, msg: String },
    #[error("series grids differ: {0}")]
    GridMismatch(String),
    #[error("no runs found under {0}")]
    NoRuns(PathBuf),
    #[error("plot: {0}")]
    Plot(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
