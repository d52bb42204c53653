use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value at step {step} (energy {energy})")]
    NumericAbort { step: u64, energy: f64 },

    #[error("did not converge after {steps} steps: {detail}")]
    NotConverged { steps: u64, detail: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("packet half-width {width} passed the limit {limit} at step {step}")]
    WidthExceeded { step: u64, width: f64, limit: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
