use thiserror::Error;

/// Errors raised by the pricing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An enumeration or catalog would exceed the configured size cap.
    #[error("capacity exceeded: {what} would have {size} entries (cap {cap})")]
    Capacity { what: String, size: f64, cap: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PricingError>;

impl PricingError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PricingError::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for PricingError {
    fn from(e: std::io::Error) -> Self {
        PricingError::Io(e.to_string())
    }
}
