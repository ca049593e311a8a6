//! A pair of accuracy curves that agree up to `floor(gamma * n_delta)` yet
//! end at least `delta` apart, so no allocator can tell them apart without
//! spending beyond that point.

use serde::{Deserialize, Serialize};

use super::{compute_n_delta, well_behaved, Verdict, ACCURACY_SLACK};
use crate::bound::ideal_derivative;
use crate::error::ConfigError;

/// `(sqrt(5) - 1) / 2`
pub fn gamma() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// `1 / gamma^2`, the largest slope multiplier with `1/d <= 1 - gamma`.
pub fn d_constant() -> f64 {
    1.0 / (gamma() * gamma())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `1 - delta - c * delta / n`
    Base,
    /// Base up to the split, constant after it.
    FlatAfterSplit,
    /// Base up to the split, then linear with `mid_slope` up to `n_delta`
    /// and `tail_slope` after it.
    GrowsAfterSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCurve {
    pub shape: Shape,
    pub c: f64,
    pub delta: f64,
    pub split: u64,
    pub n_delta: u64,
    pub mid_slope: f64,
    pub tail_slope: f64,
}

impl PiecewiseCurve {
    fn base(&self, n: u64) -> f64 {
        1.0 - self.delta - self.c * self.delta / n as f64
    }

    pub fn value(&self, n: u64) -> f64 {
        let v = match self.shape {
            Shape::Base => self.base(n),
            _ if n <= self.split => self.base(n),
            Shape::FlatAfterSplit => self.base(self.split),
            Shape::GrowsAfterSplit => {
                let at_split = self.base(self.split);
                if n <= self.n_delta {
                    at_split + (n - self.split) as f64 * self.mid_slope
                } else {
                    at_split
                        + (self.n_delta - self.split) as f64 * self.mid_slope
                        + (n - self.n_delta) as f64 * self.tail_slope
                }
            }
        };
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundInstance {
    pub delta: f64,
    pub n_full: u64,
    pub c: f64,
    /// First `n` at which the base curve is non-negative.
    pub n_lo: u64,
    pub n_delta: u64,
    /// `floor(gamma * n_delta)`
    pub split: u64,
    pub base: PiecewiseCurve,
    /// Stops improving after the split; `(N, delta)`-suboptimal.
    pub suboptimal: PiecewiseCurve,
    /// Keeps improving after the split; the best learner.
    pub optimal: PiecewiseCurve,
    pub verdicts: Vec<Verdict>,
}

impl LowerBoundInstance {
    /// Evaluate both curves at every size in `trace`.
    pub fn observe(&self, trace: &[u64]) -> (Vec<f64>, Vec<f64>) {
        (
            trace.iter().map(|&n| self.suboptimal.value(n)).collect(),
            trace.iter().map(|&n| self.optimal.value(n)).collect(),
        )
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Build the indistinguishable pair for `(delta, N, c)`.
///
/// The middle slope is `d * delta / N`, lowered to the base curve's
/// derivative at the split when that is smaller so the curve stays concave.
/// The tail slope is `delta / N`, raised just enough to keep the final gap
/// at `delta` when the lowered middle slope falls short.
pub fn lower_bound_instance(
    delta: f64,
    n_full: u64,
    c: f64,
) -> Result<LowerBoundInstance, ConfigError> {
    let bad = |msg: String| Err(ConfigError::InvalidCurve(msg));
    if !(delta > 0.0 && delta < 1.0) {
        return bad(format!("delta = {delta} must lie in (0, 1)"));
    }
    if !(c.is_finite() && c > 0.0) {
        return bad(format!("c = {c} must be positive"));
    }
    if (c * n_full as f64).sqrt() > n_full as f64 {
        return bad(format!("sqrt(c N) exceeds N = {n_full}"));
    }
    let n_lo = ((c * delta / (1.0 - delta)).ceil() as u64).max(1);
    let mut base = PiecewiseCurve {
        shape: Shape::Base,
        c,
        delta,
        split: 0,
        n_delta: 0,
        mid_slope: 0.0,
        tail_slope: 0.0,
    };
    let n_delta = compute_n_delta(|n| base.base(n), delta, n_full, 1);
    let split = (gamma() * n_delta as f64).floor() as u64;
    if split <= n_lo + 1 {
        return bad(format!(
            "split point {split} does not clear the curve's domain start {n_lo}"
        ));
    }
    let limit = delta / n_full as f64;
    let base_slope = base.base(split) - base.base(split - 1);
    let mid_slope = (d_constant() * limit).min(base_slope);
    let rise = (n_delta - split) as f64 * mid_slope;
    let tail_slope = if n_delta < n_full {
        let needed = (delta - rise) / (n_full - n_delta) as f64;
        limit.max(needed * (1.0 + 1e-12))
    } else {
        0.0
    };
    if tail_slope > mid_slope {
        return bad("cannot keep the growing curve concave".into());
    }
    base.split = split;
    base.n_delta = n_delta;
    let suboptimal = PiecewiseCurve {
        shape: Shape::FlatAfterSplit,
        ..base
    };
    let optimal = PiecewiseCurve {
        shape: Shape::GrowsAfterSplit,
        mid_slope,
        tail_slope,
        ..base
    };
    let raw_top = base.base(split) + rise + (n_full - n_delta) as f64 * tail_slope;
    if raw_top > 1.0 {
        return bad(format!("growing curve reaches {raw_top} > 1"));
    }

    let mut verdicts = Vec::new();
    let g = gamma();
    let d = d_constant();
    verdicts.push(Verdict::new(
        "gamma_condition",
        None,
        (1.0 / d - (1.0 - g)).abs() <= 1e-12 && 1.0 / d <= 1.0 - g + 1e-12,
        format!(
            "gamma = {g}, d = {d}, 1/d = {}, 1 - gamma = {}",
            1.0 / d,
            1.0 - g
        ),
    ));
    let prefix_diff = (1..=split).find(|&n| suboptimal.value(n) != optimal.value(n));
    verdicts.push(Verdict::new(
        "prefix_identical",
        None,
        prefix_diff.is_none(),
        match prefix_diff {
            None => format!("identical on 1..={split}"),
            Some(n) => format!("differ at n = {n}"),
        },
    ));
    let gap = optimal.value(n_full) - suboptimal.value(n_full);
    verdicts.push(Verdict::new(
        "final_gap",
        None,
        gap >= delta - ACCURACY_SLACK,
        format!("gap {gap} vs delta {delta}"),
    ));
    let wb_sub = well_behaved(|n| suboptimal.value(n), n_lo, n_full);
    let wb_opt = well_behaved(|n| optimal.value(n), n_lo, n_full);
    verdicts.push(Verdict::new(
        "both_well_behaved",
        None,
        wb_sub.is_ok() && wb_opt.is_ok(),
        format!("suboptimal: {wb_sub:?}, optimal: {wb_opt:?}"),
    ));
    let d_at = ideal_derivative(|n| base.base(n), n_delta, 1).unwrap_or(f64::INFINITY);
    let d_sub = ideal_derivative(|n| suboptimal.value(n), n_full, 1).unwrap_or(f64::INFINITY);
    verdicts.push(Verdict::new(
        "derivative_at_ndelta",
        None,
        d_at <= limit && d_sub <= limit,
        format!("f'(n_delta) = {d_at}, suboptimal f'(N) = {d_sub}, delta/N = {limit}"),
    ));

    Ok(LowerBoundInstance {
        delta,
        n_full,
        c,
        n_lo,
        n_delta,
        split,
        base,
        suboptimal,
        optimal,
        verdicts,
    })
}
