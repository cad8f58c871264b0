use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config key `{key}`: cannot parse `{value}` ({expected})")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("incompatible pairing: encoder {encoder} requires {required} storage, got {got}")]
    IncompatibleStorage {
        encoder: &'static str,
        required: &'static str,
        got: &'static str,
    },

    #[error("resolution {resolution} unsupported by encoder {encoder}: {reason}")]
    UnsupportedResolution {
        encoder: &'static str,
        resolution: usize,
        reason: String,
    },

    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },

    #[error("archive: {0}")]
    Archive(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
