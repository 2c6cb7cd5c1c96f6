use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Input data (probabilities, CSV columns) is malformed.
    #[error("data error: {0}")]
    Data(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Numeric failures (quadrature, fits) as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Quadrature(_) | Error::Fit(_))
    }
}
