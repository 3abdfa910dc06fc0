use thiserror::Error;

/// Errors surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input vector length does not match the configured dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Input rejected because it is outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is well-formed but outside this build's capability
    /// envelope (e.g. quadrature dimension or moment order budget).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or foreign file contents.
    #[error("bad file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
