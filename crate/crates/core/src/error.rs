use std::io;

/// Errors produced by index construction, search and dataset handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("input outside the family's domain: {0}")]
    Domain(String),

    #[error("cannot build index: {0}")]
    Build(String),

    #[error("malformed vecs file at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("value {value} is not representable as {kind}")]
    Range { value: f64, kind: &'static str },

    #[error("cannot load index: {0}")]
    Load(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}
