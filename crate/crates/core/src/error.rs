use thiserror::Error;

pub type Result<T> = std::result::Result<T, AloeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AloeError {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Conditioning event whose probability underflows to zero.
    #[error(
        "event with threshold {tau} has probability below double precision and cannot be sampled"
    )]
    Unsampleable { tau: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance is near-singular along a constrained direction (constraint {index}, variance ratio {ratio:e})")]
    NearSingularCovariance { index: usize, ratio: f64 },

    #[error("constraint {index} has zero variance (gamma' Sigma gamma = {variance:e})")]
    DegenerateConstraint { index: usize, variance: f64 },

    #[error("network is disconnected ({components} components)")]
    DisconnectedNetwork { components: usize },

    #[error("deterministic constraint {label} is violated at the mean ({value} > {bound})")]
    InfeasibleDeterministic {
        label: String,
        value: f64,
        bound: f64,
    },

    /// Every event probability is zero, so the union has probability zero.
    #[error("empty mixture: the union bound is 0")]
    EmptyMixture,

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for AloeError {
    fn from(e: std::io::Error) -> Self {
        AloeError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for AloeError {
    fn from(e: serde_json::Error) -> Self {
        AloeError::InvalidInput(e.to_string())
    }
}
