use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label {label} out of range (state space has {size} labels)")]
    LabelOutOfRange { label: usize, size: usize },

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("no transition records to fit")]
    EmptyTrace,

    #[error("policy library is empty")]
    EmptyLibrary,

    #[error("value iteration did not converge after {sweeps} sweeps (last delta {delta:e})")]
    NotConverged { sweeps: usize, delta: f64 },

    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
