use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("resolution {requested} exceeds the configured cap {cap}")]
    ResolutionCap { requested: u32, cap: u32 },

    #[error("expected {expected} samples for resolution {resolution}, got {actual}")]
    SampleCount {
        resolution: u32,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: u32, right: u32 },

    #[error("index {index} out of range for resolution {resolution} ({what})")]
    IndexOutOfRange {
        what: &'static str,
        index: u128,
        resolution: u32,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix invariant violated at (k={k}, n={n}): {reason}")]
    MatrixInvariant { k: usize, n: usize, reason: String },

    #[error("scale too small: {0}")]
    ScaleTooSmall(String),

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    #[error("invalid descriptor: {0}")]
    Descriptor(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
