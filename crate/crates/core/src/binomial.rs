//! Exact binomial lower-tail probabilities.
//!
//! The consistency check accepts a claimed position list when at most an
//! `epsilon` fraction of its entries mismatch the receiver's list. A forged
//! list mismatches independently with probability 1/3 per position, so the
//! probability that a forgery slips through is the exact binomial tail
//! `P(Binomial(n, 1/3) <= floor(epsilon * n))`. Session results report this
//! number instead of claiming absolute security.
//!
//! Tails are accumulated in log space with the term recurrence
//! `pmf(k+1)/pmf(k) = (n-k)/(k+1) * p/(1-p)`, which stays finite far past the
//! point where the probabilities themselves underflow.

/// Natural log of `P(Binomial(n, p) <= k)`.
///
/// Returns 0.0 (probability 1) when `k >= n` or `p == 0`, and negative
/// infinity for an empty tail (`p == 1` with `k < n`).
pub fn ln_lower_tail(n: u64, p: f64, k: u64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    if k >= n || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return f64::NEG_INFINITY;
    }
    let ln_ratio_base = p.ln() - (1.0 - p).ln();
    let mut ln_term = n as f64 * (1.0 - p).ln(); // ln pmf(0)
    let mut ln_sum = ln_term;
    for i in 0..k {
        ln_term += ((n - i) as f64).ln() - ((i + 1) as f64).ln() + ln_ratio_base;
        // log-sum-exp accumulation keyed on the larger operand
        ln_sum = if ln_sum >= ln_term {
            ln_sum + (ln_term - ln_sum).exp().ln_1p()
        } else {
            ln_term + (ln_sum - ln_term).exp().ln_1p()
        };
    }
    ln_sum.min(0.0)
}

/// `P(Binomial(n, p) <= k)`, exact up to floating-point rounding.
pub fn lower_tail(n: u64, p: f64, k: u64) -> f64 {
    ln_lower_tail(n, p, k).exp()
}

/// Probability that a forged list of `n` claimed positions passes the content
/// check at mismatch tolerance `epsilon`: `P(Binomial(n, 1/3) <= floor(eps*n))`.
pub fn forgery_acceptance(n: usize, epsilon: f64) -> f64 {
    lower_tail(n as u64, 1.0 / 3.0, (epsilon * n as f64).floor() as u64)
}

/// Log-space version of [`forgery_acceptance`] for reports where the
/// probability underflows.
pub fn ln_forgery_acceptance(n: usize, epsilon: f64) -> f64 {
    ln_lower_tail(n as u64, 1.0 / 3.0, (epsilon * n as f64).floor() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle: exact tail for small n via integer binomial coefficients.
    fn exact_small(n: u64, p: f64, k: u64) -> f64 {
        let mut sum = 0.0;
        for i in 0..=k.min(n) {
            let mut coeff = 1.0f64;
            for j in 0..i {
                coeff = coeff * (n - j) as f64 / (j + 1) as f64;
            }
            sum += coeff * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32);
        }
        sum
    }

    #[test]
    fn matches_brute_force_for_small_n() {
        for (n, k) in [(10, 3), (30, 4), (30, 10), (100, 15)] {
            let got = lower_tail(n, 1.0 / 3.0, k);
            let want = exact_small(n, 1.0 / 3.0, k);
            assert!(
                (got - want).abs() < 1e-12 * want.max(1e-300),
                "n={n} k={k}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn residual_at_n30_is_about_1_2_percent() {
        // P(Binomial(30, 1/3) <= 4): the forgery acceptance probability at
        // n = 30, epsilon = 0.15.
        let tail = forgery_acceptance(30, 0.15);
        let want = exact_small(30, 1.0 / 3.0, 4);
        assert!((tail - want).abs() < 1e-14);
        assert!(tail > 0.011 && tail < 0.014, "tail = {tail}");
    }

    #[test]
    fn degenerate_parameters() {
        assert_eq!(lower_tail(10, 0.0, 0), 1.0);
        assert_eq!(lower_tail(10, 1.0, 9), 0.0);
        assert_eq!(lower_tail(10, 1.0, 10), 1.0);
        assert_eq!(lower_tail(10, 0.3, 10), 1.0);
        assert_eq!(lower_tail(0, 0.5, 0), 1.0);
    }

    #[test]
    fn tail_is_monotone_in_k() {
        let mut prev = 0.0;
        for k in 0..=50 {
            let tail = lower_tail(50, 1.0 / 3.0, k);
            assert!(tail >= prev);
            prev = tail;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_tail_stays_finite_when_probability_underflows() {
        // At n = 3000, eps = 0.15 the tail is ~e^-260; still representable,
        // and the log route must agree.
        let ln = ln_forgery_acceptance(3000, 0.15);
        assert!(ln.is_finite() && ln < -200.0);
        let p = forgery_acceptance(3000, 0.15);
        assert!(p > 0.0);
        assert!((p.ln() - ln).abs() < 1e-9 * ln.abs());
        // Far past f64 range the probability flushes to zero but the log
        // remains usable.
        let ln_big = ln_lower_tail(200_000, 1.0 / 3.0, 30_000);
        assert!(ln_big.is_finite() && ln_big < -10_000.0);
        assert_eq!(lower_tail(200_000, 1.0 / 3.0, 30_000), 0.0);
    }
}
