use thiserror::Error;

/// Errors produced by the numerical kernels, model construction and fitting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error(
        "moment M[r={r}, i={i}] failed cross-check: closed form {closed_form:e} vs quadrature {quadrature:e}"
    )]
    Integrity {
        r: usize,
        i: usize,
        closed_form: f64,
        quadrature: f64,
    },

    #[error(
        "PWM system solved with relative residual {residual:e} (tolerance {tolerance:e}, condition ~{condition:e}); \
         try a degree lower than {degree}"
    )]
    Conditioning {
        degree: usize,
        residual: f64,
        tolerance: f64,
        condition: f64,
    },

    #[error("degenerate data ({0}); the PWM system cannot determine a non-constant model")]
    DegenerateData(String),

    #[error("model is not strictly increasing on u in [{lo}, {hi}]")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("quantile derivative is infinite at u = {u}")]
    InfiniteDerivative { u: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("unknown distribution '{0}'")]
    UnknownDistribution(String),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad
    /// arguments or inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::Integrity { .. }
                | Error::Conditioning { .. }
                | Error::DegenerateData(_)
                | Error::NonMonotone { .. }
                | Error::InfiniteDerivative { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
