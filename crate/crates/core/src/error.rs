use std::path::PathBuf;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: no samples")]
    NoSamples { path: PathBuf },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training diverged at iteration {iter}: loss {loss:e}")]
    Diverged { iter: usize, loss: f64 },

    #[error("numerically singular system: {0}")]
    Singular(String),

    #[error("resource guard: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
