use thiserror::Error;

/// Errors raised by the library. Quantitative failures of a checked
/// condition are report entries, not errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hyperbolicity violation: unstable derivative {value} is not positive")]
    HyperbolicityViolation { value: f64 },

    #[error("cone violation: slope transport denominator {denominator} vanishes")]
    ConeViolation { denominator: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("Hölder failure: series terms did not decay (last term {last_term:e} after {terms} terms)")]
    HolderFailure { last_term: f64, terms: usize },

    #[error("enumeration of {words} words exceeds the budget of {budget}")]
    EnumerationBudget { words: u128, budget: u128 },

    #[error("empty intersection: {0}")]
    EmptyIntersection(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
