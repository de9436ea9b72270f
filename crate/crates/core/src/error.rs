use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t:e} s outside chirp window [0, {duration:e}] s")]
    OutOfWindow { t: f64, duration: f64 },

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid antenna model: {0}")]
    InvalidModel(String),

    #[error("radar equation singular at zero range")]
    Singularity,

    /// Echo delay reaches or exceeds the chirp duration, so no de-chirp
    /// overlap remains.
    #[error("reflector '{label}' delay {tau:e} s is beyond the unambiguous window {duration:e} s")]
    BeyondUnambiguousWindow { label: String, tau: f64, duration: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("malformed raw trace at byte {offset}: {msg}")]
    RawFormat { offset: usize, msg: String },

    #[error("no moving target detected")]
    NoMoverDetected,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("gain table: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
