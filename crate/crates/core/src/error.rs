//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violated its domain (negative duration, W < 2, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A packet-length distribution is malformed (b2 < b^2, weights off, ...).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Offered load at or above capacity; the queueing model has no
    /// stationary solution.
    #[error("unstable system: offered load rho = {rho} >= 1")]
    Unstable { rho: f64 },

    /// Parameters are individually valid but put the polling model outside
    /// its applicable range (P{{Q >= 1}} > 1, nonpositive denominator, ...).
    #[error("model out of range: {0}")]
    ModelOutOfRange(String),

    /// Bad run configuration (duplicate seeds, empty budget, ...).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
