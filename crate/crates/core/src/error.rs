use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),

    #[error("invalid face: {0}")]
    InvalidFace(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A least-squares block had free control points but no data.
    #[error("insufficient data for face {face}: {reason}")]
    InsufficientData { face: String, reason: String },

    /// A front generator could not produce the requested number of points.
    #[error("insufficient front: requested {requested} points, only {available} available ({context})")]
    InsufficientFront {
        requested: usize,
        available: usize,
        context: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
