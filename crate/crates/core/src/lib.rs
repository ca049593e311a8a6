//! Cost-sensitive training-data allocation across a pool of learners.
//!
//! The allocator repeatedly hands a geometrically growing slice of the
//! training set to whichever learner currently has the most optimistic
//! projected upper bound on its full-data accuracy. Learners that look
//! hopeless are suspended early, so the bulk of the data (and compute)
//! goes to the learners that can still win.
//!
//! Module map:
//!
//! * [`model`] — domain types, cost and regret accounting, solution checks.
//! * [`bound`] — monotone repair, regression slopes, projected bounds.
//! * [`scheduler`] — the allocation loop plus full-training, fixed-fraction
//!   and elimination baselines.
//! * [`learners`] — the learner interface with synthetic, replay-table and
//!   external-process adapters.
//! * [`ideal`] — exact-mode runs and verifiers for the allocation, cost and
//!   bound-validity guarantees, including the lower-bound construction.

pub mod bound;
pub mod error;
pub mod exact;
pub mod ideal;
pub mod learners;
pub mod model;
pub mod scheduler;

pub use error::{BoundError, ConfigError, LearnerError, ModelError, RunError};
pub use learners::{
    Capabilities, CurveFamily, ExternalLearner, Learner, ReplayLearner, ReplayTable,
    SyntheticCurveSpec, SyntheticLearner, WorkerClient,
};
pub use model::{
    AllocationRecord, AllocationSequence, CurveSample, DaubConfig, LearnerId, LearnerState,
    RunReport, SolutionVerdict, Strategy,
};
pub use scheduler::{BoundPolicy, RunOptions};
