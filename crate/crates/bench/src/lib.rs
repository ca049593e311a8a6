//! Fixed workloads shared by the allocation benchmarks.

use daub_core::ideal::{seeded_pool, IdealProblem, SuiteParams};
use daub_core::{DaubConfig, SyntheticLearner};

/// `b = 10`, `r = 2`, `delta = 0.01` at the given `N`.
pub fn config(n_full: u64) -> DaubConfig {
    DaubConfig::new(2.0, 10, n_full, 0.01, 1).expect("valid benchmark config")
}

/// A seeded pool of `m` well-behaved curves.
pub fn problem(m: usize, n_full: u64, seed: u64) -> IdealProblem {
    seeded_pool(seed, m, &config(n_full), &SuiteParams::default()).expect("pool samples")
}

/// The same pool with Gaussian validation noise.
pub fn noisy_learners(problem: &IdealProblem, sigma: f64) -> Vec<SyntheticLearner> {
    problem
        .specs()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            SyntheticLearner::new(format!("l{i}"), s.with_noise(sigma)).expect("valid spec")
        })
        .collect()
}
