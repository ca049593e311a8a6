use thiserror::Error;

use crate::model::LearnerId;

/// Invalid allocator parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("geometric ratio r must be > 1 (got {0})")]
    RatioTooSmall(f64),
    #[error("base size b must be >= 1")]
    ZeroBase,
    #[error("full training size N must be >= 1")]
    ZeroFull,
    #[error("constraint b*r^2 <= N violated: {b}*{r}^2 = {product} > {n_full}")]
    BootstrapExceedsFull {
        b: u64,
        r: f64,
        n_full: u64,
        product: f64,
    },
    #[error("suboptimality gap delta must lie in (0, 1] (got {0})")]
    DeltaOutOfRange(f64),
    #[error("derivative step s must be >= 1")]
    ZeroStep,
    #[error("explicit schedule is invalid: {0}")]
    BadSchedule(String),
    #[error("invalid learning-curve spec: {0}")]
    InvalidCurve(String),
}

/// Errors from the accounting layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("no cost available for learner {learner} at n = {n}")]
    IncompleteCost { learner: LearnerId, n: u64 },
    #[error("accuracy map is empty")]
    EmptyAccuracies,
    #[error("value {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("{name} = {value} outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error("negative cost {0}")]
    NegativeCost(f64),
    #[error(
        "allocation ({learner}, {n}) does not exceed that learner's previous allocation {previous}"
    )]
    NonIncreasingAllocation {
        learner: LearnerId,
        n: u64,
        previous: u64,
    },
    #[error("delta must lie in (0, 1] (got {0})")]
    DeltaOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("regression abscissae must be strictly increasing")]
    DegenerateAbscissae,
    #[error("derivative step reaches below n = 1 (n = {n}, s = {s})")]
    DerivativeDomain { n: u64, s: u64 },
}

/// Failure of a single learner to produce a sample.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    /// The learner crashed, timed out or reported a training failure.
    #[error("training failed: {0}")]
    Failed(String),
    /// The worker answered with something that does not parse as a protocol message.
    #[error("protocol error: {0}")]
    Protocol(String),
    /// The request was outside what the adapter can serve.
    #[error("request rejected: {0}")]
    Rejected(String),
    #[error("n = {n} outside the table range [{lo}, {hi}]")]
    OutOfRange { n: u64, lo: u64, hi: u64 },
    #[error("invalid sample: {0}")]
    InvalidSample(#[from] ModelError),
}

/// Errors that abort a whole run.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("no learners supplied")]
    NoLearners,
    #[error("every learner failed")]
    AllLearnersFailed,
    #[error("learner {0} cannot report exact accuracies, required by the ideal bound policy")]
    ExactModeUnsupported(LearnerId),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
