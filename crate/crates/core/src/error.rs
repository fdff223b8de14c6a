use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain where the quantity is defined.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    /// The mean-field dynamics has no stationary regime for these parameters.
    #[error("no stationary regime: {0}")]
    Unstable(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("tail exponent out of range (searched up to {max})")]
    TailOutOfRange { max: f64 },

    #[error("insufficient tail sample: need at least {needed} order statistics, have {have}")]
    InsufficientTail { needed: usize, have: usize },

    #[error("degenerate series: {0}")]
    Degenerate(&'static str),

    #[error("exponential fit failed: {0}")]
    FitFailed(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
