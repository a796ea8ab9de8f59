/// Width of the reported intervals in standard deviations.
pub const Z: f64 = 3.0;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_rate() {
        let (lo, hi) = wilson(286, 100_000, Z);
        assert!(lo < 2.86e-3 && 2.86e-3 < hi);
        assert_eq!(wilson(10, 10, Z).1, 1.0);
        let (lo, hi) = wilson(0, 100, Z);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }
}
