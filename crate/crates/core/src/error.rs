use thiserror::Error;

/// Errors raised by the pricing library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument outside domain ({msg})")]
    Domain { func: &'static str, msg: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} failed to converge: {msg}")]
    NoConvergence { what: &'static str, msg: String },
    #[error("singular system at step {step} (pivot {pivot:e})")]
    Singular { step: usize, pivot: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { func, msg: msg.into() }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
