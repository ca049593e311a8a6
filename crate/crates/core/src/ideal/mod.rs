//! Exact-mode runs and checks of the allocation guarantees.
//!
//! With noiseless, well-behaved accuracy curves and derivative-based
//! bounds the allocator's behaviour can be compared against two per-learner
//! thresholds:
//!
//! * `n_star`: the first size at which the learner's bound drops below the
//!   best final accuracy `f*`;
//! * `n_delta`: the first size at which the learner's discrete derivative
//!   drops to `delta / N`.
//!
//! [`run_daub_star`] runs the allocator and emits one [`Verdict`] per check.

mod lower_bound;
mod sampler;

pub use lower_bound::{
    d_constant, gamma, lower_bound_instance, LowerBoundInstance, PiecewiseCurve,
};
pub use sampler::{
    sample_curve, sample_pool, sample_problem, seeded_pool, seeded_problem, SuiteParams,
};

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{clamp_unit, ideal_bound, ideal_derivative};
use crate::error::{ConfigError, RunError};
use crate::exact;
use crate::learners::{first_irregularity, SyntheticCurveSpec, SyntheticLearner};
use crate::model::{classify_suboptimal, DaubConfig, LearnerId, RunReport};
use crate::scheduler::{run_daub, RunOptions};

/// Absolute slack on accuracy comparisons; covers float rounding only.
pub const ACCURACY_SLACK: f64 = 1e-9;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub learner: Option<LearnerId>,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(check: &str, learner: Option<LearnerId>, passed: bool, detail: String) -> Self {
        Self {
            check: check.to_string(),
            learner,
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub learner: LearnerId,
    pub n_star: u64,
    pub n_delta: u64,
    pub suboptimal: bool,
}

/// `N` if `u(N) >= f_star`, otherwise the first `l` in `1..=N` with `u(l) < f_star`.
pub fn compute_n_star<U: Fn(u64) -> f64>(u: U, f_star: f64, n_full: u64) -> u64 {
    if u(n_full) >= f_star {
        return n_full;
    }
    (1..=n_full).find(|&l| u(l) < f_star).unwrap_or(n_full)
}

/// `N` if `f'(N) > delta / N`, otherwise the first `l > s` with `f'(l) <= delta / N`.
pub fn compute_n_delta<F: Fn(u64) -> f64>(f: F, delta: f64, n_full: u64, s: u64) -> u64 {
    let limit = delta / n_full as f64;
    let deriv = |l: u64| ideal_derivative(&f, l, s).expect("l > s");
    if n_full <= s || deriv(n_full) > limit {
        return n_full;
    }
    ((s + 1)..=n_full)
        .find(|&l| deriv(l) <= limit)
        .unwrap_or(n_full)
}

/// Check `bound(n) >= f(N)` and that the bound never increases, at every
/// size in `sizes` beyond the derivative step.
///
/// `train` gives the training-accuracy cap at `n`, if any.
pub fn verify_ub_validity<F, T>(f: F, train: T, sizes: &[u64], n_full: u64, s: u64) -> Verdict
where
    F: Fn(u64) -> f64,
    T: Fn(u64) -> Option<f64>,
{
    let target = f(n_full);
    let mut prev: Option<(u64, f64)> = None;
    for &n in sizes.iter().filter(|&&n| n > s) {
        let u = ideal_bound(&f, train(n), n, n_full, s).expect("n > s");
        if u < target - ACCURACY_SLACK {
            return Verdict::new(
                "bound_valid",
                None,
                false,
                format!("bound {u} below f(N) = {target} at n = {n}"),
            );
        }
        if let Some((pn, pu)) = prev {
            if u > pu + ACCURACY_SLACK {
                return Verdict::new(
                    "bound_valid",
                    None,
                    false,
                    format!("bound rose from {pu} at n = {pn} to {u} at n = {n}"),
                );
            }
        }
        prev = Some((n, u));
    }
    Verdict::new("bound_valid", None, true, format!("f(N) = {target}"))
}

/// [`verify_ub_validity`] for a synthetic spec on a config's schedule,
/// from the bootstrap horizon on (no bound exists before it).
pub fn verify_spec_ub(spec: &SyntheticCurveSpec, config: &DaubConfig) -> Verdict {
    let train = |n: u64| spec.train_margin.map(|_| spec.train_accuracy(n));
    verify_ub_validity(
        |n| spec.exact_accuracy(n),
        train,
        &config.sizes()[2..],
        config.n_full(),
        config.s(),
    )
}

/// Largest `n * f'(n)` over `lo..=hi`.
pub fn max_scaled_derivative<F: Fn(u64) -> f64>(f: F, lo: u64, hi: u64, s: u64) -> f64 {
    (lo.max(s + 1)..=hi)
        .map(|n| n as f64 * ideal_derivative(&f, n, s).expect("n > s"))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A pool of noiseless synthetic learners with everything needed to
/// check the exact-mode guarantees.
#[derive(Debug, Clone)]
pub struct IdealProblem {
    specs: Vec<SyntheticCurveSpec>,
    config: DaubConfig,
    finals: Vec<f64>,
    f_star: f64,
    i_star: LearnerId,
}

impl IdealProblem {
    /// Validates every curve: noiseless, well-behaved on `1..=N`, and (when
    /// a training margin is set) with a training accuracy that never
    /// increases and never drops below `f(N)` from the bootstrap horizon on.
    pub fn new(specs: Vec<SyntheticCurveSpec>, config: DaubConfig) -> Result<Self, ConfigError> {
        if specs.is_empty() {
            return Err(ConfigError::InvalidCurve("empty learner pool".into()));
        }
        let n_full = config.n_full();
        let horizon = config.bootstrap_horizon();
        if config.s() >= horizon {
            return Err(ConfigError::InvalidCurve(format!(
                "derivative step {} must be below the bootstrap horizon {horizon}",
                config.s()
            )));
        }
        specs
            .par_iter()
            .enumerate()
            .try_for_each(|(i, spec)| -> Result<(), ConfigError> {
                spec.validate()?;
                if spec.noise_sigma != 0.0 {
                    return Err(ConfigError::InvalidCurve(format!(
                        "learner {i} is noisy; exact mode needs noiseless curves"
                    )));
                }
                if let Some(n) = spec.well_behaved_violation(1, n_full) {
                    return Err(ConfigError::InvalidCurve(format!(
                        "learner {i} is not well-behaved at n = {n}"
                    )));
                }
                if spec.train_margin.is_some()
                    && !sampler::train_bound_certified(spec, horizon, n_full)
                {
                    return Err(ConfigError::InvalidCurve(format!(
                        "learner {i}: training accuracy is not a non-increasing bound on f(N)"
                    )));
                }
                Ok(())
            })?;
        let finals: Vec<f64> = specs.iter().map(|s| s.exact_accuracy(n_full)).collect();
        let (i_star, f_star) =
            finals
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, f)| {
                    if f > best.1 {
                        (i, f)
                    } else {
                        best
                    }
                });
        Ok(Self {
            specs,
            config,
            finals,
            f_star,
            i_star: LearnerId(i_star),
        })
    }

    pub fn specs(&self) -> &[SyntheticCurveSpec] {
        &self.specs
    }

    pub fn config(&self) -> &DaubConfig {
        &self.config
    }

    pub fn final_accuracies(&self) -> &[f64] {
        &self.finals
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn i_star(&self) -> LearnerId {
        self.i_star
    }

    pub fn learners(&self) -> Vec<SyntheticLearner> {
        self.specs
            .iter()
            .enumerate()
            .map(|(i, s)| SyntheticLearner::new(format!("L{i}"), *s).expect("validated"))
            .collect()
    }

    /// The bound learner `i` would report at `l`. Below the bootstrap
    /// horizon no bound exists and the learner is always eligible, so the
    /// value is 1.
    pub fn bound_at(&self, i: usize, l: u64) -> f64 {
        if l < self.config.bootstrap_horizon() {
            return 1.0;
        }
        let spec = &self.specs[i];
        let train = spec
            .train_margin
            .map(|_| spec.train_accuracy(l))
            .unwrap_or(1.0);
        ideal_bound(
            |n| spec.exact_accuracy(n),
            Some(train),
            l,
            self.config.n_full(),
            self.config.s(),
        )
        .map(clamp_unit)
        .unwrap_or(1.0)
    }

    pub fn suboptimal(&self) -> BTreeSet<LearnerId> {
        let map = self
            .finals
            .iter()
            .enumerate()
            .map(|(i, &f)| (LearnerId(i), f))
            .collect();
        classify_suboptimal(&map, self.config.delta()).expect("finals are finite and non-empty")
    }

    /// Whether every suboptimal learner has `f'(N) <= delta / N`.
    pub fn derivative_hypothesis_holds(&self) -> bool {
        let n_full = self.config.n_full();
        let limit = self.config.delta() / n_full as f64;
        self.suboptimal().iter().all(|id| {
            let spec = &self.specs[id.0];
            ideal_derivative(|n| spec.exact_accuracy(n), n_full, self.config.s())
                .is_ok_and(|d| d <= limit)
        })
    }

    pub fn thresholds(&self) -> Vec<ThresholdRecord> {
        let sub = self.suboptimal();
        let n_full = self.config.n_full();
        (0..self.specs.len())
            .into_par_iter()
            .map(|i| {
                let spec = &self.specs[i];
                ThresholdRecord {
                    learner: LearnerId(i),
                    n_star: compute_n_star(|l| self.bound_at(i, l), self.f_star, n_full),
                    n_delta: compute_n_delta(
                        |n| spec.exact_accuracy(n),
                        self.config.delta(),
                        n_full,
                        self.config.s(),
                    ),
                    suboptimal: sub.contains(&LearnerId(i)),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealOutcome {
    pub report: RunReport,
    pub thresholds: Vec<ThresholdRecord>,
    pub verdicts: Vec<Verdict>,
    /// Smallest bound any learner would report at `N`.
    pub u_min_full: f64,
}

impl IdealOutcome {
    pub fn failed(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

fn is_unit_cost(spec: &SyntheticCurveSpec) -> bool {
    spec.cost_scale == 1.0 && spec.cost_exponent == 1.0
}

/// `cost <= r/(r-1) * c(r * n)`.
fn within_cost_bound(spec: &SyntheticCurveSpec, cost: f64, r: f64, n: u64) -> bool {
    if is_unit_cost(spec) {
        exact::within_scaled_overhead(cost, r, n)
    } else {
        cost * (r - 1.0) <= r * spec.cost(r * n as f64) * (1.0 + 1e-12)
    }
}

/// Run the exact-mode allocator on `problem` and check every guarantee.
///
/// Per learner: each step stays below `r * n_star`, the total below
/// `r^2/(r-1) * n_star`, and the cost below `r/(r-1) * c(r * n_star)`.
/// Per suboptimal learner additionally: `n_star <= n_delta` and cost below
/// `r/(r-1) * c(r * n_delta)`. For the selected learner: cost within
/// `r/(r-1) * c(N)`, and optimality when every suboptimal learner's
/// derivative at `N` is at most `delta / N`.
pub fn run_daub_star(problem: &IdealProblem) -> Result<IdealOutcome, RunError> {
    let config = problem.config();
    let r = config.r();
    let n_full = config.n_full();
    let mut learners = problem.learners();
    let mut report = run_daub(&mut learners, config, &RunOptions::ideal())?;
    report.attach_oracle(problem.final_accuracies(), config.delta())?;
    let thresholds = problem.thresholds();

    let mut verdicts = Vec::new();
    for t in &thresholds {
        let id = t.learner;
        let spec = &problem.specs()[id.0];
        let induced = report.sequence.induced(id);
        let largest = induced.last().copied().unwrap_or(0);
        let total = report.sequence.total_allocated(id);
        let cost = report.per_learner_cost[id.0];
        verdicts.push(Verdict::new(
            "step_below_r_nstar",
            Some(id),
            exact::below_ratio_times(largest, r, t.n_star),
            format!("largest step {largest}, n_star {}", t.n_star),
        ));
        verdicts.push(Verdict::new(
            "total_below_nstar_bound",
            Some(id),
            exact::below_total_allocation_bound(total, r, t.n_star),
            format!("total {total}, n_star {}", t.n_star),
        ));
        verdicts.push(Verdict::new(
            "cost_within_nstar_bound",
            Some(id),
            within_cost_bound(spec, cost, r, t.n_star),
            format!("cost {cost}, n_star {}", t.n_star),
        ));
        if t.suboptimal {
            verdicts.push(Verdict::new(
                "nstar_at_most_ndelta",
                Some(id),
                t.n_star <= t.n_delta,
                format!("n_star {}, n_delta {}", t.n_star, t.n_delta),
            ));
            verdicts.push(Verdict::new(
                "cost_within_ndelta_bound",
                Some(id),
                within_cost_bound(spec, cost, r, t.n_delta),
                format!("cost {cost}, n_delta {}", t.n_delta),
            ));
        }
    }

    let sel = report.selected;
    let full_cost = report.recorded_cost(sel, n_full).unwrap_or(f64::NAN);
    verdicts.push(Verdict::new(
        "selected_cost_overhead",
        Some(sel),
        exact::within_geometric_overhead(report.selected_cost, r, full_cost),
        format!("cost {} vs c(N) {full_cost}", report.selected_cost),
    ));
    if problem.derivative_hypothesis_holds() {
        let loss = report.loss.unwrap_or(f64::NAN);
        verdicts.push(Verdict::new(
            "selected_optimal",
            Some(sel),
            !problem.suboptimal().contains(&sel),
            format!("loss {loss}"),
        ));
    }

    let u_min_full = (0..problem.specs().len())
        .map(|i| problem.bound_at(i, n_full))
        .fold(f64::INFINITY, f64::min);
    Ok(IdealOutcome {
        report,
        thresholds,
        verdicts,
        u_min_full,
    })
}

/// One row of the regret trend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub n_full: u64,
    pub regret: f64,
    /// `M * cost(S_selected)`.
    pub scale: f64,
    pub ratio: f64,
    pub selected: LearnerId,
}

/// Run the same pool at each `N` in `grid` and tabulate
/// `regret / (M * cost(S_selected))`.
pub fn regret_trend(
    specs: &[SyntheticCurveSpec],
    grid: &[u64],
    b: u64,
    r: f64,
    delta: f64,
    s: u64,
) -> Result<Vec<TrendRow>, RunError> {
    grid.par_iter()
        .map(|&n_full| {
            let config = DaubConfig::new(r, b, n_full, delta, s)?;
            let problem = IdealProblem::new(specs.to_vec(), config)?;
            let mut learners = problem.learners();
            let mut report = run_daub(&mut learners, problem.config(), &RunOptions::ideal())?;
            report.attach_oracle(problem.final_accuracies(), delta)?;
            let regret = report.regret.expect("oracle attached");
            let scale = specs.len() as f64 * report.selected_cost;
            Ok(TrendRow {
                n_full,
                regret,
                scale,
                ratio: regret / scale,
                selected: report.selected,
            })
        })
        .collect()
}

/// Whether `f` is well-behaved on `lo..=hi`, reporting the first offending `n`.
pub fn well_behaved<F: Fn(u64) -> f64>(f: F, lo: u64, hi: u64) -> Result<(), u64> {
    match first_irregularity(f, lo, hi) {
        None => Ok(()),
        Some(n) => Err(n),
    }
}

#[cfg(test)]
mod tests;
