use thiserror::Error;

/// Errors raised by the landscape toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Input violates the membership conditions of its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure did not reach its residual target.
    #[error("numerical error: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Gradient says critical but the spectrum is not at a critical configuration.
    #[error("inconsistent classification: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(message: impl Into<String>, residual: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            residual,
        }
    }
}
