use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("atom at {location} lies outside the support [0, {upper}]")]
    OutOfSupport { location: f64, upper: f64 },

    #[error("mixture weights must be nonnegative and sum to 1 (sum = {0})")]
    MixtureWeights(f64),

    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),

    #[error("state count mismatch: {left} vs {right}")]
    StateCountMismatch { left: usize, right: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("Markov chain is reducible: state {0} cannot reach every other state")]
    Reducible(usize),

    #[error("Markov chain is periodic with period {0}")]
    Periodic(usize),

    #[error("{what} did not converge within {limit} iterations")]
    NotConverged { what: &'static str, limit: usize },

    #[error("linear system of dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    #[error("state {state} was not visited by the {samples} recentering samples of epoch {epoch}")]
    UnvisitedState { epoch: usize, state: usize, samples: usize },

    #[error("gallery: {0}")]
    Gallery(String),

    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
