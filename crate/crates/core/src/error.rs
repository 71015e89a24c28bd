use thiserror::Error;

/// Errors raised by model construction, estimators and searches.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid time allocation: {0}")]
    InvalidAllocation(String),

    #[error("observation component {index} is {value}, expected a nonnegative integer count")]
    NonIntegerObservation { index: usize, value: f64 },

    #[error("sample budget must be at least 1")]
    ZeroSamples,

    #[error("hypothesis {hypothesis} has prior {prior} but received no samples")]
    EmptyStratum { hypothesis: usize, prior: f64 },

    #[error("alpha = {alpha} outside [0, {total}]")]
    AlphaOutOfRange { alpha: f64, total: f64 },

    #[error("4a + 6b + 4c + d = {actual}, expected {expected}")]
    BudgetMismatch { actual: f64, expected: f64 },

    #[error("(a, b, c, d) must contain a positive entry")]
    ZeroDirection,

    #[error("series needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("series abscissae must be strictly increasing and uniformly spaced")]
    NonUniformGrid,

    #[error("invalid search configuration: {0}")]
    InvalidSearch(String),

    #[error("non-finite estimate: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
