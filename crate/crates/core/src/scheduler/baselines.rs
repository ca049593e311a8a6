use super::{names, RunOptions, ScheduleState};
use crate::error::RunError;
use crate::learners::Learner;
use crate::model::{DaubConfig, LearnerId, RunReport, Strategy};

fn ids(range: std::ops::Range<usize>) -> impl Iterator<Item = LearnerId> {
    range.map(LearnerId)
}

/// Train every learner on `N` and keep the best.
pub fn run_full_training<L: Learner>(
    learners: &mut [L],
    config: &DaubConfig,
    seed: u64,
) -> Result<RunReport, RunError> {
    if learners.is_empty() {
        return Err(RunError::NoLearners);
    }
    let n_full = config.n_full();
    let mut st = ScheduleState::new(
        learners.len(),
        config.clone(),
        &RunOptions::default().with_seed(seed),
    );
    for (i, learner) in learners.iter_mut().enumerate() {
        st.train(learner, LearnerId(i), n_full)?;
    }
    let selected = st
        .best_at(n_full, ids(0..learners.len()))
        .ok_or(RunError::AllLearnersFailed)?;
    let names = names(learners);
    st.finish(Strategy::FullTraining, names, selected)
}

/// Train every learner on `n`, then the best of them on `N`.
///
/// If the winner fails at `N`, the runner-up is tried, and so on.
pub fn run_fixed_fraction<L: Learner>(
    learners: &mut [L],
    n: u64,
    config: &DaubConfig,
    seed: u64,
) -> Result<RunReport, RunError> {
    if learners.is_empty() {
        return Err(RunError::NoLearners);
    }
    let n_full = config.n_full();
    let n = n.clamp(1, n_full);
    let mut st = ScheduleState::new(
        learners.len(),
        config.clone(),
        &RunOptions::default().with_seed(seed),
    );
    for (i, learner) in learners.iter_mut().enumerate() {
        st.train(learner, LearnerId(i), n)?;
    }
    let mut ranked: Vec<(LearnerId, f64)> = ids(0..learners.len())
        .filter_map(|id| st.repaired_val(id, n).map(|v| (id, v)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut selected = None;
    for (id, _) in ranked {
        if n == n_full || st.train(&mut learners[id.0], id, n_full)? {
            selected = Some(id);
            break;
        }
    }
    let selected = selected.ok_or(RunError::AllLearnersFailed)?;
    let names = names(learners);
    st.finish(Strategy::FixedFraction, names, selected)
}

/// Round-synchronous elimination: every surviving learner is trained at
/// each schedule size, and once bounds exist a learner is dropped for good
/// when its bound falls below the current validation leader's accuracy.
/// The leader itself is never dropped.
pub fn run_elimination<L: Learner>(
    learners: &mut [L],
    config: &DaubConfig,
    options: &RunOptions,
) -> Result<RunReport, RunError> {
    if learners.is_empty() {
        return Err(RunError::NoLearners);
    }
    if let super::BoundPolicy::Ideal { .. } = options.policy {
        if let Some(i) = learners.iter().position(|l| !l.capabilities().exact) {
            return Err(RunError::ExactModeUnsupported(LearnerId(i)));
        }
    }
    let n_full = config.n_full();
    let mut st = ScheduleState::new(learners.len(), config.clone(), options);
    let mut survivors: Vec<LearnerId> = ids(0..learners.len()).collect();
    for (k, &n) in config.sizes().iter().enumerate() {
        for &id in &survivors {
            st.train(&mut learners[id.0], id, n)?;
        }
        survivors.retain(|id| st.states[id.0].active);
        if survivors.is_empty() {
            return Err(RunError::AllLearnersFailed);
        }
        if n == n_full || k < 2 {
            continue;
        }
        let leader = st
            .best_at(n, survivors.iter().copied())
            .expect("survivors trained at n");
        let lead_val = st.repaired_val(leader, n).expect("leader trained at n");
        survivors
            .retain(|&id| id == leader || st.states[id.0].u_current.is_some_and(|u| u >= lead_val));
    }
    let selected = st
        .best_at(n_full, survivors)
        .ok_or(RunError::AllLearnersFailed)?;
    let names = names(learners);
    st.finish(Strategy::Elimination, names, selected)
}
