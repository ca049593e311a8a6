//! Exact comparisons for the geometric overhead bounds.
//!
//! The bounds all have the shape `lhs <= (p/q) * rhs` where `p/q` is built
//! from the ratio `r`. When `r` is a short dyadic fraction (1.5, 2, 1.25, ...)
//! and the costs are integral we compare in `u128`; otherwise we fall back to
//! `f64` with a tiny relative slack.

/// `r` as an exact fraction `num / den`, if it has one with `den <= 1024`.
pub fn dyadic_ratio(r: f64) -> Option<(u128, u128)> {
    let mut den: u128 = 1;
    while den <= 1024 {
        let scaled = r * den as f64;
        if scaled.fract() == 0.0 && scaled > 0.0 && scaled < 1e15 {
            return Some((scaled as u128, den));
        }
        den *= 2;
    }
    None
}

fn as_integer(x: f64) -> Option<u128> {
    (x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 9.0e15).then_some(x as u128)
}

const REL_SLACK: f64 = 1e-12;

/// `cost <= r/(r-1) * base`.
pub fn within_geometric_overhead(cost: f64, r: f64, base: f64) -> bool {
    if let (Some((p, q)), Some(c), Some(b)) = (dyadic_ratio(r), as_integer(cost), as_integer(base))
    {
        // c * (p - q) <= p * b
        return c * (p - q) <= p * b;
    }
    cost * (r - 1.0) <= r * base * (1.0 + REL_SLACK)
}

/// `n < r * threshold`, exact for dyadic `r`.
pub fn below_ratio_times(n: u64, r: f64, threshold: u64) -> bool {
    if let Some((p, q)) = dyadic_ratio(r) {
        return (n as u128) * q < p * threshold as u128;
    }
    (n as f64) < r * threshold as f64
}

/// `total < r^2/(r-1) * threshold`, exact for dyadic `r`.
pub fn below_total_allocation_bound(total: u64, r: f64, threshold: u64) -> bool {
    if let Some((p, q)) = dyadic_ratio(r) {
        // total * (p - q) * q < p^2 * threshold
        return (total as u128) * (p - q) * q < p * p * threshold as u128;
    }
    (total as f64) * (r - 1.0) < r * r * threshold as f64
}

/// `cost <= r/(r-1) * (r * n)`: the geometric overhead on a unit-cost
/// learner whose steps stay below `r * n`.
pub fn within_scaled_overhead(cost: f64, r: f64, n: u64) -> bool {
    if let (Some((p, q)), Some(c)) = (dyadic_ratio(r), as_integer(cost)) {
        // c * (p - q) / q <= (p / q) * (p / q) * n
        return c * (p - q) * q <= p * p * n as u128;
    }
    cost * (r - 1.0) <= r * r * n as f64 * (1.0 + REL_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_ratios() {
        assert_eq!(dyadic_ratio(2.0), Some((2, 1)));
        assert_eq!(dyadic_ratio(1.5), Some((3, 2)));
        assert_eq!(dyadic_ratio(1.25), Some((5, 4)));
        assert_eq!(dyadic_ratio(1.1), None);
    }

    #[test]
    fn overhead_is_exact_at_the_boundary() {
        // r = 2: cost <= 2 * base, equality allowed.
        assert!(within_geometric_overhead(200.0, 2.0, 100.0));
        assert!(!within_geometric_overhead(201.0, 2.0, 100.0));
        // r = 1.5: factor 3.
        assert!(within_geometric_overhead(300.0, 1.5, 100.0));
        assert!(!within_geometric_overhead(301.0, 1.5, 100.0));
    }

    #[test]
    fn strict_allocation_bounds() {
        assert!(below_ratio_times(299, 1.5, 200));
        assert!(!below_ratio_times(300, 1.5, 200));
        // r = 2: r^2/(r-1) = 4.
        assert!(below_total_allocation_bound(399, 2.0, 100));
        assert!(!below_total_allocation_bound(400, 2.0, 100));
        // r = 1.5: 2.25 / 0.5 = 4.5.
        assert!(below_total_allocation_bound(449, 1.5, 100));
        assert!(!below_total_allocation_bound(450, 1.5, 100));
    }

    #[test]
    fn scaled_overhead_allows_equality() {
        // r = 2: 2 * 2 * 100 = 400.
        assert!(within_scaled_overhead(400.0, 2.0, 100));
        assert!(!within_scaled_overhead(401.0, 2.0, 100));
        // r = 1.5: 3 * 1.5 * 100 = 450.
        assert!(within_scaled_overhead(450.0, 1.5, 100));
        assert!(!within_scaled_overhead(451.0, 1.5, 100));
    }
}
