use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Core(#[from] pvrl_core::Error),
    #[error(transparent)]
    Nn(#[from] pvrl_nn::NnError),
    #[error("observation does not match spec: {0}")]
    SpecMismatch(String),
    #[error("not enough data to sample: {0}")]
    InsufficientData(String),
    #[error("non-finite {what} at update {update}")]
    NonFinite { what: &'static str, update: u64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("replay header line {line}: {msg}")]
    Header { line: usize, msg: String },
    #[error("checkpoint state line {line}: {msg}")]
    State { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl AgentError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        AgentError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, AgentError>;
