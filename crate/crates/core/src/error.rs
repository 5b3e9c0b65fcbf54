use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("orbit fell below b_{k_max} at step {step}; increase the partition depth")]
    Underflow { step: usize, k_max: usize },

    #[error("itinerary is all-negative; parsing needs at least one visit to J")]
    TrivialParsing,

    #[error("itineraries differ at index {index}")]
    ItineraryMismatch { index: usize },

    #[error("no return to J within {cap} steps")]
    CapExceeded { cap: u64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
