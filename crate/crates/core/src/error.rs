use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the library.
///
/// Variants fall into three families that the command-line front end maps
/// onto distinct exit codes: I/O faults, parse/configuration faults, and
/// invariant violations on otherwise well-formed data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: image codec: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Parse,
    Invariant,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Error::Invariant(message.into())
    }

    pub fn shape(message: impl Into<String>) -> Self {
        Error::Shape(message.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Image { source, .. } => match source {
                image::ImageError::IoError(_) => ErrorKind::Io,
                _ => ErrorKind::Parse,
            },
            Error::Parse { .. } => ErrorKind::Parse,
            Error::Invariant(_) | Error::Shape(_) => ErrorKind::Invariant,
        }
    }
}
