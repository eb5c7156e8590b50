use thiserror::Error;

/// Errors shared across the analysis, sizing, embedding, and simulation modules.
///
/// Embedding rejections are *not* errors: a slice that does not fit is an
/// ordinary outcome ([`crate::embedding::EmbedOutcome::Rejected`]). Errors are
/// reserved for inputs that violate a contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The traffic equations have no solution: the routing matrix keeps all
    /// traffic circulating (I - R^T is singular).
    #[error("closed network: traffic equations are singular")]
    ClosedNetwork,

    #[error("unstable network: {0}")]
    Unstable(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown virtual network `{0}`")]
    UnknownVn(String),

    /// Exhaustive search was requested on an instance beyond its size limits.
    #[error("instance too large for exhaustive search: {0}; use greedy mode")]
    TooLarge(String),

    #[error("malformed schedule: {0}")]
    MalformedSchedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
