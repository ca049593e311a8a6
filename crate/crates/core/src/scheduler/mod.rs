//! The allocation loop and baseline strategies.
//!
//! Every learner is first trained on the three smallest schedule sizes.
//! After that the learner with the highest bound is advanced one schedule
//! step at a time until some learner reaches `N`; that learner is selected.

mod baselines;

pub use baselines::{run_elimination, run_fixed_fraction, run_full_training};

use crate::bound::{
    clamp_nonincreasing, clamp_unit, combined_bound, ideal_bound, monotone_repair, projected_bound,
    regression_slope,
};
use crate::error::{ConfigError, RunError};
use crate::learners::{allocation_seed, Learner};
use crate::model::{
    AllocationRecord, AllocationSequence, DaubConfig, LearnerFailure, LearnerId, LearnerState,
    RunReport, Strategy,
};

/// Geometric sizes `b, ceil(r b), ceil(r ceil(r b)), ...` capped at `N`.
pub fn schedule_sizes(b: u64, r: f64, n_full: u64) -> Result<Vec<u64>, ConfigError> {
    if !(r.is_finite() && r > 1.0) {
        return Err(ConfigError::RatioTooSmall(r));
    }
    if b == 0 {
        return Err(ConfigError::ZeroBase);
    }
    if n_full == 0 {
        return Err(ConfigError::ZeroFull);
    }
    let product = b as f64 * r * r;
    if product > n_full as f64 {
        return Err(ConfigError::BootstrapExceedsFull {
            b,
            r,
            n_full,
            product,
        });
    }
    let mut sizes = vec![b];
    let mut n = b;
    while n < n_full {
        let x = r * n as f64;
        // r * n can land a hair above an integer (1.1 * 10 = 11.000000000000002).
        let rounded = x.round();
        let next = if (x - rounded).abs() <= 1e-9 * x {
            rounded
        } else {
            x.ceil()
        };
        n = (next as u64).max(n + 1).min(n_full);
        sizes.push(n);
    }
    Ok(sizes)
}

/// How a learner's bound is computed after each training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundPolicy {
    /// Regression slope over the three most recent repaired validation points.
    Estimated { train_cap: bool },
    /// Discrete derivative of the learner's exact accuracy curve.
    Ideal { train_cap: bool },
}

impl BoundPolicy {
    pub fn strategy(&self) -> Strategy {
        match self {
            BoundPolicy::Estimated { train_cap: true } => Strategy::Daub,
            BoundPolicy::Estimated { train_cap: false } => Strategy::DaubNoTrainBound,
            BoundPolicy::Ideal { .. } => Strategy::DaubStar,
        }
    }

    pub fn train_cap(&self) -> bool {
        match *self {
            BoundPolicy::Estimated { train_cap } | BoundPolicy::Ideal { train_cap } => train_cap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub policy: BoundPolicy,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            policy: BoundPolicy::Estimated { train_cap: true },
            seed: 0,
        }
    }
}

impl RunOptions {
    pub fn ideal() -> Self {
        Self {
            policy: BoundPolicy::Ideal { train_cap: true },
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Learner with the highest bound among active learners below `N`.
///
/// Ties go to the smaller `n_current`, then the smaller id.
pub fn next_learner(states: &[LearnerState], n_full: u64) -> Option<LearnerId> {
    states
        .iter()
        .filter(|s| s.active && s.n_current < n_full)
        .filter_map(|s| s.u_current.map(|u| (u, s)))
        .max_by(|(ua, a), (ub, b)| {
            ua.total_cmp(ub)
                .then(b.n_current.cmp(&a.n_current))
                .then(b.id.cmp(&a.id))
        })
        .map(|(_, s)| s.id)
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct ScheduleState {
    pub states: Vec<LearnerState>,
    pub sequence: AllocationSequence,
    pub config: DaubConfig,
    pub rng_seed: u64,
    policy: BoundPolicy,
    records: Vec<AllocationRecord>,
    failures: Vec<LearnerFailure>,
}

impl ScheduleState {
    pub fn new(learner_count: usize, config: DaubConfig, options: &RunOptions) -> Self {
        Self {
            states: (0..learner_count)
                .map(|i| LearnerState::new(LearnerId(i)))
                .collect(),
            sequence: AllocationSequence::new(),
            config,
            rng_seed: options.seed,
            policy: options.policy,
            records: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn records(&self) -> &[AllocationRecord] {
        &self.records
    }

    pub fn failures(&self) -> &[LearnerFailure] {
        &self.failures
    }

    /// Train `learner` on `n` and update its history and bound.
    ///
    /// Returns `Ok(false)` when the learner failed; it is then deactivated
    /// and the allocation is not recorded.
    pub fn train<L: Learner + ?Sized>(
        &mut self,
        learner: &mut L,
        id: LearnerId,
        n: u64,
    ) -> Result<bool, RunError> {
        let seed = allocation_seed(self.rng_seed, id, n);
        let sample = match learner.train_eval(n, seed) {
            Ok(s) if s.n == n => s,
            Ok(s) => {
                self.fail(
                    id,
                    n,
                    format!("asked for n = {n}, got a sample for n = {}", s.n),
                );
                return Ok(false);
            }
            Err(e) => {
                self.fail(id, n, e.to_string());
                return Ok(false);
            }
        };
        self.sequence.push(id, n)?;
        let raw_val = sample.val_acc;
        let state = &mut self.states[id.0];
        let mut stored = sample;
        if let Some(prev) = state.history.values_mut().next_back() {
            let (p, c) = monotone_repair(prev.val_acc, sample.val_acc);
            prev.val_acc = p;
            stored.val_acc = c;
        }
        state.history.insert(n, stored);
        state.n_current = n;

        let bound = if state.history.len() >= 3 {
            let n_full = self.config.n_full();
            let train = self.policy.train_cap().then_some(sample.train_acc);
            let fresh = match self.policy {
                BoundPolicy::Estimated { .. } => {
                    let slope = regression_slope(&state.recent(3))?;
                    let projected = projected_bound(stored.val_acc, slope, n, n_full);
                    match train {
                        Some(t) => combined_bound(t, projected),
                        None => projected,
                    }
                }
                BoundPolicy::Ideal { .. } => {
                    let f = |m: u64| learner.exact_accuracy(m).unwrap_or(f64::NAN);
                    ideal_bound(f, train, n, n_full, self.config.s())?
                }
            };
            let u = clamp_unit(clamp_nonincreasing(state.u_current, fresh));
            state.u_current = Some(u);
            state.bounds.push((n, u));
            Some(u)
        } else {
            None
        };

        self.records.push(AllocationRecord {
            iter: self.records.len(),
            learner: id,
            n,
            train_acc: sample.train_acc,
            val_acc: raw_val,
            bound,
            cost: sample.cost,
        });
        Ok(true)
    }

    fn fail(&mut self, id: LearnerId, n: u64, message: String) {
        self.states[id.0].active = false;
        self.failures.push(LearnerFailure {
            learner: id,
            n,
            message,
        });
    }

    /// Train every learner on the first three schedule sizes, in learner order.
    pub fn bootstrap<L: Learner>(&mut self, learners: &mut [L]) -> Result<(), RunError> {
        let first: Vec<u64> = self.config.sizes()[..3].to_vec();
        for (i, learner) in learners.iter_mut().enumerate() {
            for &n in &first {
                if !self.train(learner, LearnerId(i), n)? {
                    break;
                }
            }
        }
        Ok(())
    }

    pub fn next_learner(&self) -> Option<LearnerId> {
        next_learner(&self.states, self.config.n_full())
    }

    /// Repaired validation accuracy of `id` at `n`.
    pub fn repaired_val(&self, id: LearnerId, n: u64) -> Option<f64> {
        self.states[id.0].history.get(&n).map(|s| s.val_acc)
    }

    /// Among `candidates` trained at `n`, the one with the highest repaired
    /// validation accuracy (smallest id on ties).
    pub fn best_at(
        &self,
        n: u64,
        candidates: impl IntoIterator<Item = LearnerId>,
    ) -> Option<LearnerId> {
        let mut best: Option<(LearnerId, f64)> = None;
        for id in candidates {
            if let Some(v) = self.repaired_val(id, n) {
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((id, v));
                }
            }
        }
        best.map(|(id, _)| id)
    }

    pub fn finish(
        self,
        strategy: Strategy,
        learner_names: Vec<String>,
        selected: LearnerId,
    ) -> Result<RunReport, RunError> {
        Ok(RunReport::from_records(
            strategy,
            learner_names,
            self.config.n_full(),
            selected,
            self.records,
            self.failures,
        )?)
    }
}

pub(crate) fn names<L: Learner>(learners: &[L]) -> Vec<String> {
    learners.iter().map(|l| l.name().to_string()).collect()
}

/// Run the bound-driven allocation loop.
///
/// The first learner to reach `N` is selected. When the schedule reaches
/// `N` inside the bootstrap, every learner gets there at once and the one
/// with the best validation accuracy at `N` is selected.
pub fn run_daub<L: Learner>(
    learners: &mut [L],
    config: &DaubConfig,
    options: &RunOptions,
) -> Result<RunReport, RunError> {
    if learners.is_empty() {
        return Err(RunError::NoLearners);
    }
    if let BoundPolicy::Ideal { .. } = options.policy {
        if let Some(i) = learners.iter().position(|l| !l.capabilities().exact) {
            return Err(RunError::ExactModeUnsupported(LearnerId(i)));
        }
    }
    let n_full = config.n_full();
    let mut st = ScheduleState::new(learners.len(), config.clone(), options);
    st.bootstrap(learners)?;
    let selected = loop {
        let at_full = st
            .states
            .iter()
            .filter(|s| s.active && s.n_current == n_full)
            .map(|s| s.id);
        if let Some(id) = st.best_at(n_full, at_full.collect::<Vec<_>>()) {
            break id;
        }
        let Some(j) = st.next_learner() else {
            return Err(RunError::AllLearnersFailed);
        };
        let n = config
            .next_size(st.states[j.0].n_current)
            .expect("selected learner is below N");
        st.train(&mut learners[j.0], j, n)?;
    };
    let names = names(learners);
    st.finish(options.policy.strategy(), names, selected)
}
