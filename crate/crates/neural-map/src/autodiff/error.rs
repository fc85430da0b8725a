use thiserror::Error;

use super::shape::Shape;

#[derive(Debug, Error)]
pub enum AdError {
    #[error("{op}: incompatible shapes {lhs} and {rhs}")]
    ShapeMismatch { op: &'static str, lhs: Shape, rhs: Shape },

    #[error("{op}: expected shape {expected}, got {actual}")]
    BadShape { op: &'static str, expected: String, actual: Shape },

    #[error("{op}: position ({x},{y}) out of bounds for {shape}")]
    OutOfBounds { op: &'static str, x: i64, y: i64, shape: Shape },

    #[error("{op}: index {index} out of bounds for {count} elements")]
    IndexOutOfBounds { op: &'static str, index: usize, count: usize },

    #[error("{op}: {message}")]
    Argument { op: &'static str, message: String },

    #[error("{op}: invalid state: {message}")]
    State { op: &'static str, message: String },

    #[error("{op}: non-finite input at flat index {index}")]
    NonFinite { op: &'static str, index: usize },

    #[error("backward requires a scalar root, got shape {0}")]
    NonScalarRoot(Shape),

    #[error("backward called on an inference-mode graph")]
    NotRecording,

    #[error("non-finite gradient in parameter '{0}'")]
    NonFiniteGradient(String),

    #[error("duplicate parameter name '{0}'")]
    DuplicateParameter(String),

    #[error("unknown parameter name '{0}'")]
    UnknownParameter(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type AdResult<T> = Result<T, AdError>;
