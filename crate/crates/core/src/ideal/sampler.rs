//! Random well-behaved learner pools for the exact-mode suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IdealProblem;
use crate::error::ConfigError;
use crate::learners::SyntheticCurveSpec;
use crate::model::DaubConfig;
use crate::scheduler::schedule_sizes;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    /// Inclusive range of pool sizes.
    pub learners: (usize, usize),
    pub ratios: Vec<f64>,
    /// Inclusive range `N` is drawn from; `N` always lands on an uncapped schedule point.
    pub full_size: (u64, u64),
    pub base: (u64, u64),
    pub delta: (f64, f64),
    /// Probability that a curve is a power law rather than `a - c/n`.
    pub power_law_share: f64,
    /// Probability that a curve carries a (certified) training-accuracy margin.
    pub train_margin_share: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            learners: (2, 41),
            ratios: vec![1.5, 2.0],
            full_size: (2_000, 20_000),
            base: (1, 10),
            delta: (0.005, 0.03),
            power_law_share: 0.5,
            train_margin_share: 0.5,
        }
    }
}

/// Whether `spec`'s training accuracy is non-increasing and at least
/// `f(N)` on `lo..=n_full`.
pub(crate) fn train_bound_certified(spec: &SyntheticCurveSpec, lo: u64, n_full: u64) -> bool {
    let target = spec.exact_accuracy(n_full);
    let mut prev = f64::INFINITY;
    for n in lo..=n_full {
        let t = spec.train_accuracy(n);
        if t < target - 1e-12 || t > prev + 1e-12 {
            return false;
        }
        prev = t;
    }
    true
}

/// A random noiseless, unit-cost curve whose `n_delta` falls between twice
/// the bootstrap horizon and `N / r^2`.
///
/// The scale is derived from a log-uniform target for `n_delta` and capped
/// at the asymptote so the curve stays in `[0, 1]` from `n = 1`.
pub fn sample_curve<R: Rng + ?Sized>(
    rng: &mut R,
    config: &DaubConfig,
    power_law_share: f64,
    train_margin_share: f64,
) -> Result<SyntheticCurveSpec, ConfigError> {
    let n_full = config.n_full() as f64;
    let delta = config.delta();
    let horizon = config.bootstrap_horizon() as f64;
    let r = config.r();
    for _ in 0..1000 {
        let a: f64 = rng.random_range(0.55..0.97);
        let alpha: f64 = if rng.random_bool(power_law_share) {
            rng.random_range(0.3..1.5)
        } else {
            1.0
        };
        let lo = 2.0 * horizon;
        let hi = (n_full / (r * r)).min((a * alpha * n_full / delta).powf(1.0 / (alpha + 1.0)));
        if lo >= hi {
            continue;
        }
        let target = rng.random_range(lo.ln()..hi.ln()).exp();
        let c = (delta * target.powf(alpha + 1.0) / (alpha * n_full)).min(a);
        let mut spec = if alpha == 1.0 {
            SyntheticCurveSpec::inverse(a, c)
        } else {
            SyntheticCurveSpec::power_law(a, c, alpha)
        };
        if rng.random_bool(train_margin_share) {
            let widest = horizon.powf(0.5 - alpha).max(n_full.powf(0.5 - alpha));
            let mut m0 = (2.0 * alpha).max(1.0) * c * widest * rng.random_range(1.0..2.0);
            spec = spec.with_train_margin(m0);
            let mut tries = 0;
            while !train_bound_certified(&spec, config.bootstrap_horizon(), config.n_full()) {
                tries += 1;
                if tries > 20 {
                    return Err(ConfigError::InvalidCurve(
                        "could not certify a training margin".into(),
                    ));
                }
                m0 *= 2.0;
                spec = spec.with_train_margin(m0);
            }
        }
        return Ok(spec);
    }
    Err(ConfigError::InvalidCurve(
        "no curve fits between the bootstrap horizon and N / r^2".into(),
    ))
}

/// A pool of `m` random curves on `config`.
pub fn sample_pool<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    config: &DaubConfig,
    params: &SuiteParams,
) -> Result<IdealProblem, ConfigError> {
    let specs = (0..m)
        .map(|_| {
            sample_curve(
                rng,
                config,
                params.power_law_share,
                params.train_margin_share,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    IdealProblem::new(specs, config.clone())
}

/// A random problem: ratio, base and `N` drawn from `params`, with `N` on
/// an uncapped schedule point.
pub fn sample_problem<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SuiteParams,
) -> Result<IdealProblem, ConfigError> {
    let (n_lo, n_hi) = params.full_size;
    for _ in 0..1000 {
        let r = params.ratios[rng.random_range(0..params.ratios.len())];
        let b = rng.random_range(params.base.0..=params.base.1);
        let Ok(uncapped) = schedule_sizes(b, r, n_hi.saturating_mul(4)) else {
            continue;
        };
        let candidates: Vec<u64> = uncapped
            .iter()
            .copied()
            .enumerate()
            .filter(|&(k, n)| k >= 3 && (n_lo..=n_hi).contains(&n))
            .map(|(_, n)| n)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let n_full = candidates[rng.random_range(0..candidates.len())];
        let delta = rng.random_range(params.delta.0..=params.delta.1);
        let config = DaubConfig::new(r, b, n_full, delta, 1)?;
        let m = rng.random_range(params.learners.0..=params.learners.1);
        match sample_pool(rng, m, &config, params) {
            Ok(p) => return Ok(p),
            Err(_) => continue,
        }
    }
    Err(ConfigError::InvalidCurve(
        "suite parameters admit no problem".into(),
    ))
}

/// [`sample_problem`] driven by a ChaCha8 stream seeded with `seed`.
pub fn seeded_problem(seed: u64, params: &SuiteParams) -> Result<IdealProblem, ConfigError> {
    sample_problem(&mut ChaCha8Rng::seed_from_u64(seed), params)
}

/// [`sample_pool`] driven by a ChaCha8 stream seeded with `seed`.
pub fn seeded_pool(
    seed: u64,
    m: usize,
    config: &DaubConfig,
    params: &SuiteParams,
) -> Result<IdealProblem, ConfigError> {
    sample_pool(&mut ChaCha8Rng::seed_from_u64(seed), m, config, params)
}
