use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("{what} violates invariant `{invariant}`")]
    Invariant { what: String, invariant: String },
    #[error("schema violation in {location}: {message}")]
    Schema { location: String, message: String },
    #[error("series `{series}` has {got} rows, expected {expected}")]
    LengthMismatch { series: String, expected: usize, got: usize },
    #[error("unknown technology `{0}`")]
    UnknownTechnology(String),
    #[error("technology `{technology}` references missing profile `{profile}`")]
    MissingProfile { technology: String, profile: String },
    #[error("missing time series file {path}")]
    MissingSeries { path: PathBuf },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CoreError {
    pub fn invariant(what: impl Into<String>, invariant: impl Into<String>) -> Self {
        CoreError::Invariant {
            what: what.into(),
            invariant: invariant.into(),
        }
    }

    pub fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        CoreError::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}
