use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter violates its invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Exact evaluation is not available at this degree.
    #[error("degree {n} exceeds the supported maximum {max}")]
    UnsupportedDegree { n: usize, max: usize },

    /// The truncation rule needs more terms than the configured cap allows.
    #[error("series needs {needed} terms but the cap is {cap}")]
    TruncationCap { needed: usize, cap: usize },

    /// A density was requested for a discrete jump law.
    #[error("jump law `{0}` is discrete and has no density")]
    NoDensity(&'static str),

    /// The operation does not apply to the given boundary or jump law.
    #[error("wrong operation: {0}")]
    WrongOperation(String),

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge (error estimate {estimate:e}, tolerance {tolerance:e})")]
    Quadrature { estimate: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
