use thiserror::Error;

/// Errors raised by the agent, planning and information-theory routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A builder, parameter set or alphabet was malformed.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Observed evidence has zero probability under every hypothesis.
    #[error("impossible evidence: {0}")]
    ImpossibleEvidence(String),

    /// Exhaustive enumeration would exceed the joint-entry budget.
    #[error("enumeration of {requested} joint entries exceeds the limit of {limit}")]
    Size { requested: u128, limit: u128 },

    /// The capacity iteration did not close its bound gap in time.
    #[error(
        "capacity iteration did not converge after {iterations} iterations \
         (lower bound {lower}, upper bound {upper})"
    )]
    Convergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    /// A log-probability term evaluated to minus infinity on positive support.
    #[error("zero probability on a positive-support point: {0}")]
    NegativeInfinity(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
