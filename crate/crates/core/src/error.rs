//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown target id `{0}`")]
    UnknownTarget(String),

    #[error("target `{0}` has no Fourier data")]
    NoFourierData(String),

    #[error("constant bound violated: {0}")]
    BoundViolated(String),

    #[error("rejection sampler exhausted its budget after {proposals} proposals ({accepted} accepted)")]
    SamplerExhausted { proposals: u64, accepted: usize },

    #[error("malformed net file: {0}")]
    NetFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and positive, got {v}")))
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(invalid("eta", format!("must lie in (0, 1), got {eta}")))
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(invalid("d", "dimension must be at least 1"))
    } else {
        Ok(())
    }
}
