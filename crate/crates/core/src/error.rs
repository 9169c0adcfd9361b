use thiserror::Error;

/// Errors raised by estimators, membership fitting, and the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("trial arm {arm} has no rows")]
    EmptyArm { arm: u8 },

    #[error("row {row}: true outcome Z is missing")]
    MissingTruth { row: usize },

    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("separation detected after {iterations} iterations: {detail}")]
    SeparationDetected { iterations: usize, detail: String },

    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("IRLS did not converge in {iterations} iterations (score max-norm {score_norm:e})")]
    NotConverged { iterations: usize, score_norm: f64 },

    #[error("row {row}: probability {value} is outside (0, 1)")]
    ProbabilityOutOfRange { row: usize, value: f64 },

    #[error("zero spread: {0}")]
    ZeroSpread(String),

    #[error("stratum {stratum} has {available} members, {requested} requested")]
    InsufficientStratum {
        stratum: &'static str,
        available: usize,
        requested: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
