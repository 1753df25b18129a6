use thiserror::Error;

/// Errors raised by the tracking core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A value violated the domain of an operation (bad box, degenerate warp, ...).
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    /// Frames were stepped out of order.
    #[error("frame {frame} is not after previously stepped frame {last}")]
    Sequencing { frame: u32, last: u32 },
    /// A numeric routine could not proceed (e.g. singular innovation covariance).
    #[error("numeric failure: {0}")]
    Numeric(&'static str),
    /// Two embeddings of different dimension met within one run.
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A generator or tracker config is not usable.
    #[error("invalid config: {0}")]
    Config(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
