use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Topology { path: PathBuf, source: ebs_core::Error },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("`{key}` (line {line}): unknown key")]
    UnknownKey { key: String, line: usize },

    #[error("`{key}` (line {line}): expected {expected}, found {found}")]
    Type {
        key: String,
        line: usize,
        expected: &'static str,
        found: &'static str,
    },

    #[error("`{key}` (line {line}): {reason}")]
    Range { key: String, line: usize, reason: String },

    #[error("`{key}`: required key missing")]
    Missing { key: String },

    #[error("{0}")]
    Plan(String),

    #[error(transparent)]
    Core(#[from] ebs_core::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The key path an error refers to, when it has one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::UnknownKey { key, .. }
            | Error::Type { key, .. }
            | Error::Range { key, .. }
            | Error::Missing { key } => Some(key),
            _ => None,
        }
    }

    /// Line number in the scenario file, when known.
    pub fn line(&self) -> Option<usize> {
        match self {
            Error::Syntax { line, .. }
            | Error::UnknownKey { line, .. }
            | Error::Type { line, .. }
            | Error::Range { line, .. } => Some(*line),
            _ => None,
        }
    }
}
