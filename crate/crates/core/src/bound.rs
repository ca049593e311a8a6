//! Projected upper bounds on full-data accuracy.
//!
//! A learner's bound at allocation `n` is
//! `min(train_acc(n), val_acc(n) + (N - n) * slope(n))`, clamped so the
//! per-learner stream never increases. `slope` is either the least-squares
//! slope through the three most recent (repaired) validation points or, in
//! exact mode, a one-sided discrete derivative of the true accuracy curve.

use crate::error::BoundError;

/// Pairwise monotone repair of two consecutive validation accuracies.
///
/// If the newer value is lower, both meet at their mean.
pub fn monotone_repair(prev: f64, cur: f64) -> (f64, f64) {
    if cur >= prev {
        (prev, cur)
    } else {
        let mid = 0.5 * (prev + cur);
        (mid, mid)
    }
}

/// Ordinary least-squares slope through `points`.
pub fn regression_slope(points: &[(u64, f64)]) -> Result<f64, BoundError> {
    if points.len() < 2 || points.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(BoundError::DegenerateAbscissae);
    }
    let k = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0 as f64).sum::<f64>() / k;
    // Offsets from the first value keep a constant series at slope exactly 0.
    let y0 = points[0].1;
    let y_mean = points.iter().map(|p| p.1 - y0).sum::<f64>() / k;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        let dx = x as f64 - x_mean;
        (sxy + dx * ((y - y0) - y_mean), sxx + dx * dx)
    });
    Ok(sxy / sxx)
}

/// `val_acc + (N - n) * slope`, deliberately unclamped.
pub fn projected_bound(val_acc: f64, slope: f64, n: u64, n_full: u64) -> f64 {
    val_acc + (n_full.saturating_sub(n)) as f64 * slope
}

pub fn combined_bound(train_acc: f64, projected: f64) -> f64 {
    train_acc.min(projected)
}

/// Keeps a learner's bound stream non-increasing. Pass `None` for the first bound.
pub fn clamp_nonincreasing(previous: Option<f64>, new_bound: f64) -> f64 {
    match previous {
        Some(p) => p.min(new_bound),
        None => new_bound,
    }
}

pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// One-sided discrete derivative `(f(n) - f(n - s)) / s`.
pub fn ideal_derivative<F: Fn(u64) -> f64>(f: F, n: u64, s: u64) -> Result<f64, BoundError> {
    if s == 0 || n <= s {
        return Err(BoundError::DerivativeDomain { n, s });
    }
    Ok((f(n) - f(n - s)) / s as f64)
}

/// Exact-mode bound at `n` before stream clamping:
/// `clamp01(min(train, f(n) + (N - n) f'(n)))`, or without the training
/// cap when `train` is `None`.
pub fn ideal_bound<F: Fn(u64) -> f64>(
    f: F,
    train: Option<f64>,
    n: u64,
    n_full: u64,
    s: u64,
) -> Result<f64, BoundError> {
    let slope = ideal_derivative(&f, n, s)?;
    let projected = projected_bound(f(n), slope, n, n_full);
    Ok(clamp_unit(match train {
        Some(t) => combined_bound(t, projected),
        None => projected,
    }))
}
