use std::path::PathBuf;

/// Errors produced by the morphology, layer, training and dataset code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("mismatched LIP ceilings: {left} vs {right}")]
    CeilingMismatch { left: f64, right: f64 },

    #[error("invalid LIP ceiling {0}: must be a positive finite number")]
    InvalidCeiling(f64),

    #[error("shape mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    ShapeMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("pixel buffer has {got} values, expected {expected}")]
    BufferLength { expected: usize, got: usize },

    #[error("probe support is empty, or leaves some pixel without a tap inside the image")]
    EmptySupport,

    #[error("probe window must have odd dimensions for distance maps, got {width}x{height}")]
    EvenWindow { width: usize, height: usize },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("backward called without a matching forward pass")]
    MissingForwardCache,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
