//! Poisson distribution helpers.

/// `P_k(λ) = e^{-λ} Σ_{l ≤ k} λ^l / l!`, the probability of at most `k` arrivals.
///
/// Terms are accumulated in log space, so large `λ` does not underflow the
/// leading factor before the sum is formed.
pub fn poisson_cdf(k: u32, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let ln_l = lambda.ln();
    let mut log_term = -lambda;
    let mut sum = log_term.exp();
    for l in 1..=k {
        log_term += ln_l - f64::from(l).ln();
        sum += log_term.exp();
    }
    sum.min(1.0)
}

/// `Pr[N = k]` for `N ~ Poisson(λ)`.
pub fn poisson_pmf(k: u32, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let mut log_term = -lambda;
    for l in 1..=k {
        log_term += lambda.ln() - f64::from(l).ln();
    }
    log_term.exp()
}

/// `Σ_{k=1..m} (1 - P_{k-1}(λ)) = E[min(N, m)]`, the right-hand side of a
/// hierarchy constraint over `m` offline vertices.
pub fn expected_capped_arrivals(m: u32, lambda: f64) -> f64 {
    (1..=m).map(|k| 1.0 - poisson_cdf(k - 1, lambda)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_abs_diff_eq!(poisson_cdf(0, 1.0), (-1.0f64).exp(), epsilon = 1e-16);
        assert_abs_diff_eq!(poisson_cdf(0, 1.0), 0.367879, epsilon = 1e-6);
        assert_abs_diff_eq!(poisson_cdf(1, 1.0), 2.0 / std::f64::consts::E, epsilon = 1e-15);
        assert_abs_diff_eq!(poisson_cdf(1, 1.0), 0.735759, epsilon = 1e-6);
        for k in 0..10 {
            assert_eq!(poisson_cdf(k, 0.0), 1.0);
        }
    }

    #[test]
    fn large_lambda_is_finite() {
        for k in 0..=10 {
            let p = poisson_cdf(k, 60.0);
            assert!(p > 0.0 && p < 1e-14, "k={k} p={p}");
        }
        assert!(poisson_cdf(3, 900.0) >= 0.0);
    }

    #[test]
    fn capped_arrivals() {
        assert_abs_diff_eq!(expected_capped_arrivals(1, 2.0), 1.0 - (-2.0f64).exp(), epsilon = 1e-15);
        // E[min(N,2)] = 2 - 2P_0 - P_1
        let l: f64 = 0.7;
        let want = 2.0 - 2.0 * (-l).exp() - l * (-l).exp();
        assert_abs_diff_eq!(expected_capped_arrivals(2, l), want, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn derivative_identity(k in 1u32..8, lambda in 0.01f64..20.0) {
            let h = 1e-5;
            let fd = (poisson_cdf(k, lambda + h) - poisson_cdf(k, lambda - h)) / (2.0 * h);
            let exact = poisson_cdf(k - 1, lambda) - poisson_cdf(k, lambda);
            prop_assert!((fd - exact).abs() <= 1e-6);
        }

        #[test]
        fn cdf_is_sum_of_pmf(k in 0u32..10, lambda in 0.0f64..30.0) {
            let s: f64 = (0..=k).map(|l| poisson_pmf(l, lambda)).sum();
            prop_assert!((s - poisson_cdf(k, lambda)).abs() <= 1e-13);
        }
    }
}
