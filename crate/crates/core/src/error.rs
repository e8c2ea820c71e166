use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exhaustive enumeration limited to s <= {max}, got s = {s}")]
    SizeLimit { s: usize, max: usize },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("{what}: quadrature did not converge (achieved error {achieved:e}, requested {requested:e})")]
    NumericalFailure {
        what: &'static str,
        achieved: f64,
        requested: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
