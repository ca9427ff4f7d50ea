use alloc::string::String;

/// Errors produced by the numerical and statistical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid argument or configuration.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Adaptive quadrature hit its subdivision limit.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    Quadrature { estimate: f64, error: f64 },
    /// Any other numerical failure (non-finite values, matrix not PSD, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("operation requires the gamma kernel")]
    UnsupportedKernel,
    /// The data cannot support the requested estimate.
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    /// Kernel fitting did not converge; carries the best point found.
    #[error("fit did not converge (best alpha {alpha}, decay {decay}, mse {mse:e})")]
    Fit { alpha: f64, decay: f64, mse: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateData(msg.into())
    }
}
