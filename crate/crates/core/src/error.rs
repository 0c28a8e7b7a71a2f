use thiserror::Error;

use crate::element::ElementType;

pub type Result<T, E = LmcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LmcError {
    #[error("buffer of {len} bytes is not a whole number of {element_type} elements ({width} bytes each)")]
    Alignment {
        len: usize,
        width: usize,
        element_type: ElementType,
    },

    #[error("shape mismatch: {left} bytes vs {right} bytes")]
    ShapeMismatch { left: usize, right: usize },

    #[error("element type mismatch: {left} vs {right}")]
    TypeMismatch {
        left: ElementType,
        right: ElementType,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("malformed codebook: {0}")]
    MalformedCodebook(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("integrity check failed: crc32 expected {expected:#010x}, computed {actual:#010x}")]
    Integrity { expected: u32, actual: u32 },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LmcError {
    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        LmcError::CorruptStream(msg.into())
    }
}
