//! Binomial confidence intervals for BER estimates.

/// Normal quantile used for every confidence interval in reports and
/// comparisons (3 sigma).
pub const CI_Z: f64 = 3.0;

/// Wilson score interval `(low, high)` for `errors` successes out of `trials`.
///
/// With no trials the interval is the whole unit range.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // the bounds are exactly 0 and 1 at the extremes; avoid rounding residue
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors >= trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Half width of the Wilson interval.
pub fn wilson_half_width(errors: u64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 0.5;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_errors_closed_form() {
        // k = 0: half width = z^2 / (2 (n + z^2))
        for n in [10u64, 1000, 1_000_000] {
            let expected = 9.0 / (2.0 * (n as f64 + 9.0));
            assert!((wilson_half_width(0, n, 3.0) - expected).abs() < 1e-15);
            let (lo, hi) = wilson_interval(0, n, 3.0);
            assert_eq!(lo, 0.0);
            assert!((hi - 9.0 / (n as f64 + 9.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn interval_contains_estimate() {
        for (k, n) in [(1u64, 10u64), (50, 100), (7, 1_000_000), (100, 100)] {
            let p = k as f64 / n as f64;
            let (lo, hi) = wilson_interval(k, n, CI_Z);
            assert!(lo <= p && p <= hi, "{k}/{n}: [{lo}, {hi}]");
        }
    }

    #[test]
    fn known_value() {
        // k = 50, n = 100, z = 3: center 0.5, half = 3/1.09 * sqrt(0.0025 + 9/40000)
        let half = wilson_half_width(50, 100, 3.0);
        let expected = 3.0 / 1.09 * (0.0025f64 + 0.000225).sqrt();
        assert!((half - expected).abs() < 1e-15);
    }
}
