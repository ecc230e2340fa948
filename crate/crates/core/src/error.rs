use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of a function.
    #[error("{func}: domain error: {msg}")]
    Domain { func: &'static str, msg: String },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error(
        "quadrature did not converge: estimate {estimate:e}, error bound {bound:e} \
         after {subintervals} subintervals"
    )]
    Quadrature {
        estimate: f64,
        bound: f64,
        subintervals: usize,
    },

    /// Invalid parameter set (type invariants or operation preconditions).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Malformed configuration file or option.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            func,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
