//! Domain types plus cost, suboptimality and regret accounting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::exact;
use crate::scheduler::schedule_sizes;

/// Index of a learner within its pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LearnerId(pub usize);

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Allocator parameters.
///
/// `d_factor = r/(r-1)` is the overhead constant the selected learner's
/// cost stays within; it is derived from `r`, never supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct DaubConfig {
    r: f64,
    b: u64,
    n_full: u64,
    delta: f64,
    s: u64,
    d_factor: f64,
    sizes: Vec<u64>,
    explicit_sizes: bool,
}

impl DaubConfig {
    pub fn new(r: f64, b: u64, n_full: u64, delta: f64, s: u64) -> Result<Self, ConfigError> {
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
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(ConfigError::DeltaOutOfRange(delta));
        }
        if s == 0 {
            return Err(ConfigError::ZeroStep);
        }
        let sizes = schedule_sizes(b, r, n_full)?;
        Ok(Self {
            r,
            b,
            n_full,
            delta,
            s,
            d_factor: r / (r - 1.0),
            sizes,
            explicit_sizes: false,
        })
    }

    /// Replace the geometric schedule with an explicit size list.
    ///
    /// The list must be strictly increasing, hold at least three sizes and
    /// end exactly at `N`.
    pub fn with_sizes(mut self, sizes: Vec<u64>) -> Result<Self, ConfigError> {
        if sizes.len() < 3 {
            return Err(ConfigError::BadSchedule(
                "need at least three sizes for the bootstrap".into(),
            ));
        }
        if sizes[0] == 0 {
            return Err(ConfigError::BadSchedule("sizes must be positive".into()));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::BadSchedule(
                "sizes must be strictly increasing".into(),
            ));
        }
        if *sizes.last().unwrap() != self.n_full {
            return Err(ConfigError::BadSchedule(format!(
                "last size must equal N = {}",
                self.n_full
            )));
        }
        self.sizes = sizes;
        self.explicit_sizes = true;
        Ok(self)
    }

    pub fn with_step(mut self, s: u64) -> Result<Self, ConfigError> {
        if s == 0 {
            return Err(ConfigError::ZeroStep);
        }
        self.s = s;
        Ok(self)
    }

    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn b(&self) -> u64 {
        self.b
    }
    pub fn n_full(&self) -> u64 {
        self.n_full
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn s(&self) -> u64 {
        self.s
    }
    pub fn d_factor(&self) -> f64 {
        self.d_factor
    }
    /// Allocation sizes a learner walks through, ending at `N`.
    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }
    pub fn has_explicit_sizes(&self) -> bool {
        self.explicit_sizes
    }
    /// Third schedule size: the first point at which a bound exists.
    pub fn bootstrap_horizon(&self) -> u64 {
        self.sizes[2]
    }
    /// Schedule size following `n`, or `None` at `N`.
    pub fn next_size(&self, n: u64) -> Option<u64> {
        self.sizes.iter().copied().find(|&m| m > n)
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NonFinite { name, value });
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(ModelError::OutOfUnitRange { name, value });
    }
    Ok(())
}

/// One training evaluation of a learner on `n` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub n: u64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub cost: f64,
}

impl CurveSample {
    pub fn new(n: u64, train_acc: f64, val_acc: f64, cost: f64) -> Result<Self, ModelError> {
        check_unit("train_acc", train_acc)?;
        check_unit("val_acc", val_acc)?;
        if !cost.is_finite() {
            return Err(ModelError::NonFinite {
                name: "cost",
                value: cost,
            });
        }
        if cost < 0.0 {
            return Err(ModelError::NegativeCost(cost));
        }
        Ok(Self {
            n,
            train_acc,
            val_acc,
            cost,
        })
    }

    pub fn error(&self) -> f64 {
        1.0 - self.val_acc
    }
}

/// Per-learner bookkeeping inside the allocation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub id: LearnerId,
    /// Samples keyed by allocation size, validation accuracies repaired.
    pub history: BTreeMap<u64, CurveSample>,
    pub n_current: u64,
    /// Latest clamped bound; `None` until the bootstrap finishes.
    pub u_current: Option<f64>,
    pub active: bool,
    /// Every bound emitted, in order.
    pub bounds: Vec<(u64, f64)>,
}

impl LearnerState {
    pub fn new(id: LearnerId) -> Self {
        Self {
            id,
            history: BTreeMap::new(),
            n_current: 0,
            u_current: None,
            active: true,
            bounds: Vec::new(),
        }
    }

    /// The `k` most recent history points, oldest first.
    pub fn recent(&self, k: usize) -> Vec<(u64, f64)> {
        let mut pts: Vec<(u64, f64)> = self
            .history
            .iter()
            .rev()
            .take(k)
            .map(|(&n, s)| (n, s.val_acc))
            .collect();
        pts.reverse();
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub learner: LearnerId,
    pub n: u64,
}

/// Ordered training allocations `(learner, n)`.
///
/// Each learner's induced subsequence must be strictly increasing in `n`;
/// [`push`](Self::push) rejects anything else.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationSequence {
    entries: Vec<Allocation>,
}

impl AllocationSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, u64)>>(pairs: I) -> Result<Self, ModelError> {
        let mut seq = Self::new();
        for (i, n) in pairs {
            seq.push(LearnerId(i), n)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, learner: LearnerId, n: u64) -> Result<(), ModelError> {
        if let Some(previous) = self.last_for(learner) {
            if n <= previous {
                return Err(ModelError::NonIncreasingAllocation {
                    learner,
                    n,
                    previous,
                });
            }
        }
        self.entries.push(Allocation { learner, n });
        Ok(())
    }

    pub fn entries(&self) -> &[Allocation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_for(&self, learner: LearnerId) -> Option<u64> {
        self.entries
            .iter()
            .rev()
            .find(|a| a.learner == learner)
            .map(|a| a.n)
    }

    /// Sizes allocated to `learner`, in order.
    pub fn induced(&self, learner: LearnerId) -> Vec<u64> {
        self.entries
            .iter()
            .filter(|a| a.learner == learner)
            .map(|a| a.n)
            .collect()
    }

    pub fn total_allocated(&self, learner: LearnerId) -> u64 {
        self.induced(learner).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|a| a.n).sum()
    }

    pub fn learners(&self) -> BTreeSet<LearnerId> {
        self.entries.iter().map(|a| a.learner).collect()
    }

    pub fn contains(&self, learner: LearnerId, n: u64) -> bool {
        self.entries
            .iter()
            .any(|a| a.learner == learner && a.n == n)
    }
}

/// Total cost of a sequence with per-learner subtotals.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub total: f64,
    pub per_learner: BTreeMap<LearnerId, f64>,
}

/// `cost(S) = sum over (i, n) in S of c_i(n)`.
///
/// `costs` returns `None` when it has no value for a pair, which surfaces
/// as [`ModelError::IncompleteCost`].
pub fn cost_of_sequence<F>(seq: &AllocationSequence, costs: F) -> Result<CostBreakdown, ModelError>
where
    F: Fn(LearnerId, u64) -> Option<f64>,
{
    let mut per_learner = BTreeMap::new();
    for a in seq.entries() {
        let c = costs(a.learner, a.n).ok_or(ModelError::IncompleteCost {
            learner: a.learner,
            n: a.n,
        })?;
        *per_learner.entry(a.learner).or_insert(0.0) += c;
    }
    let total = per_learner.values().sum();
    Ok(CostBreakdown { total, per_learner })
}

/// Learners whose accuracy is at least `delta` below the best.
///
/// Ties at the top are all optimal; the gap is measured against the
/// maximum value, so the best learner is never returned.
pub fn classify_suboptimal(
    accuracies: &BTreeMap<LearnerId, f64>,
    delta: f64,
) -> Result<BTreeSet<LearnerId>, ModelError> {
    if accuracies.is_empty() {
        return Err(ModelError::EmptyAccuracies);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(ModelError::DeltaOutOfRange(delta));
    }
    for &v in accuracies.values() {
        if !v.is_finite() {
            return Err(ModelError::NonFinite {
                name: "accuracy",
                value: v,
            });
        }
    }
    let best = accuracies
        .values()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(accuracies
        .iter()
        .filter(|(_, &f)| best - f >= delta)
        .map(|(&id, _)| id)
        .collect())
}

/// Cumulative cost spent on the `suboptimal` learners.
pub fn regret<F>(
    seq: &AllocationSequence,
    costs: F,
    suboptimal: &BTreeSet<LearnerId>,
) -> Result<f64, ModelError>
where
    F: Fn(LearnerId, u64) -> Option<f64>,
{
    let breakdown = cost_of_sequence(seq, costs)?;
    Ok(breakdown
        .per_learner
        .iter()
        .filter(|(id, _)| suboptimal.contains(id))
        .map(|(_, c)| c)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Daub,
    DaubNoTrainBound,
    DaubStar,
    FullTraining,
    FixedFraction,
    Elimination,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Daub => "daub",
            Strategy::DaubNoTrainBound => "daub_no_ft",
            Strategy::DaubStar => "daub_star",
            Strategy::FullTraining => "full",
            Strategy::FixedFraction => "fixed_fraction",
            Strategy::Elimination => "elimination",
        }
    }
}

/// One trained allocation as seen by the allocator.
///
/// `val_acc` is the observed value before any repair; `bound` is the
/// learner's clamped bound right after this allocation, if one exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub iter: usize,
    pub learner: LearnerId,
    pub n: u64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub bound: Option<f64>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerFailure {
    pub learner: LearnerId,
    pub n: u64,
    pub message: String,
}

/// Outcome of one allocation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: Strategy,
    pub learner_names: Vec<String>,
    pub n_full: u64,
    pub selected: LearnerId,
    pub sequence: AllocationSequence,
    pub records: Vec<AllocationRecord>,
    pub per_learner_cost: Vec<f64>,
    pub total_cost: f64,
    pub selected_cost: f64,
    /// Cost spent on (N, delta)-suboptimal learners, when oracle accuracies are known.
    pub regret: Option<f64>,
    /// `f*(N) - f_selected(N)`, when oracle accuracies are known.
    pub loss: Option<f64>,
    pub failures: Vec<LearnerFailure>,
}

impl RunReport {
    /// Build a report from the trained allocations; sequence and costs are
    /// derived from `records` in order.
    pub fn from_records(
        strategy: Strategy,
        learner_names: Vec<String>,
        n_full: u64,
        selected: LearnerId,
        records: Vec<AllocationRecord>,
        failures: Vec<LearnerFailure>,
    ) -> Result<Self, ModelError> {
        let mut sequence = AllocationSequence::new();
        let mut per_learner_cost = vec![0.0; learner_names.len()];
        for rec in &records {
            sequence.push(rec.learner, rec.n)?;
            per_learner_cost[rec.learner.0] += rec.cost;
        }
        // In record order, so a trace reader summing the same records gets the same bits.
        let total_cost = records.iter().map(|r| r.cost).sum();
        let selected_cost = per_learner_cost[selected.0];
        Ok(Self {
            strategy,
            learner_names,
            n_full,
            selected,
            sequence,
            records,
            per_learner_cost,
            total_cost,
            selected_cost,
            regret: None,
            loss: None,
            failures,
        })
    }

    pub fn learner_count(&self) -> usize {
        self.learner_names.len()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_allocation(&self) -> u64 {
        self.sequence.total()
    }

    /// Cost of one recorded allocation.
    pub fn recorded_cost(&self, learner: LearnerId, n: u64) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.learner == learner && r.n == n)
            .map(|r| r.cost)
    }

    /// Observed validation accuracy of `learner` at `n`, if trained there.
    pub fn observed_val(&self, learner: LearnerId, n: u64) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.learner == learner && r.n == n)
            .map(|r| r.val_acc)
    }

    /// Last bound each learner emitted.
    pub fn final_bounds(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.learner_names.len()];
        for rec in &self.records {
            if rec.bound.is_some() {
                out[rec.learner.0] = rec.bound;
            }
        }
        out
    }

    /// Fill `regret` and `loss` from oracle accuracies at `N` (indexed by learner id).
    pub fn attach_oracle(
        &mut self,
        final_accuracies: &[f64],
        delta: f64,
    ) -> Result<(), ModelError> {
        let map: BTreeMap<LearnerId, f64> = final_accuracies
            .iter()
            .enumerate()
            .map(|(i, &f)| (LearnerId(i), f))
            .collect();
        let suboptimal = classify_suboptimal(&map, delta)?;
        let regret = regret(&self.sequence, |l, n| self.recorded_cost(l, n), &suboptimal)?;
        let best = final_accuracies
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.regret = Some(regret);
        self.loss = Some(best - final_accuracies[self.selected.0]);
        Ok(())
    }
}

/// Which conditions of the allocation problem a report satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionVerdict {
    /// The sequence contains `(selected, N)`.
    pub contains_full_allocation: bool,
    /// The selected learner is (N, delta)-optimal; `None` without an oracle.
    pub selected_optimal: Option<bool>,
    /// `cost(S_selected) <= r/(r-1) * c_selected(N)`.
    pub cost_overhead_ok: bool,
}

impl SolutionVerdict {
    pub fn failed_conditions(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.contains_full_allocation {
            out.push("sequence lacks (selected, N)");
        }
        if self.selected_optimal == Some(false) {
            out.push("selected learner is (N, delta)-suboptimal");
        }
        if !self.cost_overhead_ok {
            out.push("selected learner's cost exceeds r/(r-1) * c(N)");
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failed_conditions().is_empty()
    }
}

/// Check a report against the problem's finite conditions.
///
/// `c_selected(N)` is taken from the recorded cost of the `(selected, N)`
/// allocation, so condition 3 fails along with condition 1 when it is absent.
pub fn validate_solution(
    report: &RunReport,
    config: &DaubConfig,
    oracle_accuracies: Option<&[f64]>,
) -> SolutionVerdict {
    let n_full = config.n_full();
    let full_cost = report.recorded_cost(report.selected, n_full);
    let selected_optimal = oracle_accuracies.map(|acc| {
        let map: BTreeMap<LearnerId, f64> = acc
            .iter()
            .enumerate()
            .map(|(i, &f)| (LearnerId(i), f))
            .collect();
        classify_suboptimal(&map, config.delta())
            .map(|sub| !sub.contains(&report.selected))
            .unwrap_or(false)
    });
    SolutionVerdict {
        contains_full_allocation: report.sequence.contains(report.selected, n_full),
        selected_optimal,
        cost_overhead_ok: full_cost
            .map(|c| exact::within_geometric_overhead(report.selected_cost, config.r(), c))
            .unwrap_or(false),
    }
}
