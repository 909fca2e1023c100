use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid motor parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("motor state diverged: magnitude exceeded {bound:e}")]
    Diverged { bound: f64 },

    #[error("signal too short for spectral analysis: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },

    #[error("individual {0} has not been evaluated")]
    Unevaluated(usize),

    #[error("invalid commutation sector {0}, expected 0..=5")]
    InvalidSector(u8),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// True for errors that originate from the file system rather than from
    /// the content of a configuration or archive.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
