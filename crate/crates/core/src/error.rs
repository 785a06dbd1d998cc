use thiserror::Error;

/// Errors raised by the recovery toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structurally invalid construction parameter.
    #[error("configuration error: {0}")]
    Config(String),
    /// Mismatched input shapes or lengths.
    #[error("input error: {0}")]
    Input(String),
    /// A mathematical premise of an optimality result is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The measured data admit no function of the class.
    #[error("inconsistent data: {0}")]
    InconsistentData(String),
    /// Non-finite values met while integrating.
    #[error("numerical error: {what} at {location}")]
    Numerical { what: String, location: String },
    /// A Neumann series did not reach its tolerance.
    #[error("resolvent series not converged after {order} terms (last term sup {residual:e})")]
    Truncation { order: usize, residual: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for failures of a mathematical premise rather than of the input plumbing.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Precondition(_) | Error::InconsistentData(_) | Error::Truncation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
