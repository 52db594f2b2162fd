use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("label {label} is outside the alphabet of size {size}")]
    InvalidLabel { label: usize, size: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("pairing error: expected length {expected}, found {found}")]
    Pairing { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("lattice structure error: {0}")]
    Structure(String),

    #[error("search budget exceeded: {0} sequences")]
    Budget(u128),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format version {found:?} (expected {expected:?})")]
    Version { expected: String, found: String },

    #[error("model kind mismatch: expected {expected}, found {found}")]
    Kind { expected: String, found: String },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("inconsistent dimensions: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
