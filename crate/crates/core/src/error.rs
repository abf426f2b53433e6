use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid tag {0:?}: expected O, B-<type> or I-<type>")]
    InvalidTag(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error(
        "{setting} at size {size}, seed {seed}: all {attempts} attempts were flagged as degenerate"
    )]
    FlaggedRuns {
        setting: String,
        size: usize,
        seed: usize,
        attempts: usize,
    },

    #[error("task mismatch: expected {expected}, found {found}")]
    TaskMismatch {
        expected: crate::corpus::Task,
        found: crate::corpus::Task,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
