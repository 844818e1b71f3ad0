use std::path::PathBuf;

use thiserror::Error;

/// Failures while decoding a binary PGM file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("empty file")]
    Empty,
    #[error("unsupported netpbm format {0:?} (only binary P5 is read)")]
    Unsupported(String),
    #[error("bad magic number {0:?}")]
    BadMagic(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{path}: {source}")]
    Pgm {
        path: PathBuf,
        #[source]
        source: PgmError,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than bad arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Pgm { .. } | Error::Format(_) | Error::Io { .. } | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
