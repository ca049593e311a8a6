//! Learner adapters: anything that can be trained on `n` samples and
//! report training accuracy, validation accuracy and cost.

mod external;
pub mod protocol;
mod replay;
mod synthetic;

pub use external::{ExternalLearner, WorkerClient};
pub use replay::{load_manifest, ReplayLearner, ReplayRow, ReplayTable};
pub(crate) use synthetic::first_irregularity;
pub use synthetic::{CurveFamily, SyntheticCurveSpec, SyntheticLearner};

use crate::error::LearnerError;
use crate::model::{CurveSample, LearnerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    /// Largest `n` the adapter can train on, if bounded.
    pub max_n: Option<u64>,
    /// Whether [`Learner::exact_accuracy`] returns the true curve.
    pub exact: bool,
}

/// A trainable learner.
///
/// `train_eval(n, seed)` must be deterministic in `(n, seed)` and return a
/// sample for exactly the requested `n`.
pub trait Learner: Send {
    fn name(&self) -> &str;

    fn capabilities(&self) -> Capabilities;

    fn train_eval(&mut self, n: u64, seed: u64) -> Result<CurveSample, LearnerError>;

    /// Noiseless expected accuracy at `n`; only exact-capable adapters answer.
    fn exact_accuracy(&self, _n: u64) -> Option<f64> {
        None
    }
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn capabilities(&self) -> Capabilities {
        (**self).capabilities()
    }
    fn train_eval(&mut self, n: u64, seed: u64) -> Result<CurveSample, LearnerError> {
        (**self).train_eval(n, seed)
    }
    fn exact_accuracy(&self, n: u64) -> Option<f64> {
        (**self).exact_accuracy(n)
    }
}

/// Per-allocation seed derived from the run seed, learner and size
/// (splitmix64 finaliser over the mixed inputs).
pub fn allocation_seed(run_seed: u64, learner: LearnerId, n: u64) -> u64 {
    let mut z = run_seed
        ^ (learner.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ n.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
