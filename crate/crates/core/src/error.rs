use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate population: {0}")]
    DegeneratePopulation(String),

    #[error("degenerate reference: all reference gains are zero")]
    DegenerateReference,

    #[error("kappa is undefined: expected agreement is 1")]
    UndefinedKappa,

    #[error("config error: {0}")]
    Config(String),

    #[error("transport error after {attempts} attempt(s){}: {message}", status.map(|s| format!(" (last status {s})")).unwrap_or_default())]
    Transport { attempts: u32, status: Option<u16>, message: String },

    #[error("run aborted: {} response(s) unavailable (first: {})", missing.len(), missing.first().map(String::as_str).unwrap_or("-"))]
    MissingResponses { missing: Vec<String> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }
}
