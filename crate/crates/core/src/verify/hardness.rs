//! Upper bound on any online algorithm for the edge-weighted hardness family.
//!
//! An algorithm that fills the light side up to step `k` and then follows
//! the heavy side obtains about `F(n − k)` heavy matches plus the light
//! expectation `EB(n)`; the bound is the best cutoff over `(1 + x)n`.

use serde::Serialize;

use super::VerifierReport;
use crate::error::{invalid, Result};

/// Default `m/n`, half of `c* = 0.81`.
pub const DEFAULT_M_FRAC: f64 = 0.405;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KStrategy {
    /// One prefix-sum pass, `O(n)` over all cutoffs.
    PrefixSum,
    /// Sums `EB` from scratch for each cutoff, `O(n²)`.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardnessBound {
    pub n: usize,
    pub x: f64,
    pub m_frac: f64,
    pub ratio_bound: f64,
    pub k_star: usize,
}

/// `F(0..=n)` with `F(s+1) = F + 1 − (m/n)(C(F,2)/C(n,2) + C(F,3)/C(n,3))`.
pub fn hardness_f(n: usize, m_frac: f64) -> Vec<f64> {
    let nf = n as f64;
    let c2 = nf * (nf - 1.0);
    let c3 = c2 * (nf - 2.0);
    let mut f = Vec::with_capacity(n + 1);
    let mut cur = 0.0;
    f.push(cur);
    for _ in 0..n {
        let pair = cur * (cur - 1.0);
        cur += 1.0 - m_frac * (pair / c2 + pair * (cur - 2.0) / c3);
        f.push(cur);
    }
    f
}

pub fn hardness_bound(n: usize, x: f64) -> Result<HardnessBound> {
    hardness_bound_with(n, x, DEFAULT_M_FRAC, KStrategy::PrefixSum)
}

pub fn hardness_bound_with(n: usize, x: f64, m_frac: f64, strategy: KStrategy) -> Result<HardnessBound> {
    if n < 3 {
        return Err(invalid(format!("hardness bound needs n >= 3, got {n}")));
    }
    if !(x >= 0.0 && x.is_finite() && (0.0..=1.0).contains(&m_frac)) {
        return Err(invalid(format!("hardness bound needs x >= 0 and m_frac in [0, 1], got x={x}, m_frac={m_frac}")));
    }
    let f = hardness_f(n, m_frac);
    let nf = n as f64;
    let eb: Box<dyn Fn(usize) -> f64> = match strategy {
        KStrategy::PrefixSum => {
            let mut prefix = Vec::with_capacity(n + 1);
            let mut acc = 0.0;
            prefix.push(acc);
            for v in &f[..n] {
                acc += v;
                prefix.push(acc);
            }
            Box::new(move |k| x * (nf - prefix[n - k] / nf))
        }
        KStrategy::Direct => {
            let f = f.clone();
            Box::new(move |k| (0..n).map(|t| x * (1.0 - if t > k { f[t - k] } else { 0.0 } / nf)).sum())
        }
    };
    let mut best = (f64::NEG_INFINITY, 0);
    for k in 1..=n {
        let b = (f[n - k] + eb(k) + 1.0) / ((1.0 + x) * nf);
        if b > best.0 {
            best = (b, k);
        }
    }
    Ok(HardnessBound { n, x, m_frac, ratio_bound: best.0, k_star: best.1 })
}

pub fn hardness_report(n: usize, x: f64, m_frac: f64) -> Result<VerifierReport> {
    let h = hardness_bound_with(n, x, m_frac, KStrategy::PrefixSum)?;
    Ok(VerifierReport::new("hardness", "ratio bound < 0.703", h.ratio_bound < 0.703)
        .value("ratio_bound", h.ratio_bound)
        .value("k_star", h.k_star as f64)
        .param("n", n as f64)
        .param("x", x)
        .param("m_frac", m_frac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn f_is_increasing_concave_and_below_identity() {
        let f = hardness_f(2000, DEFAULT_M_FRAC);
        assert_eq!(f[0], 0.0);
        for s in 0..2000 {
            assert!(f[s + 1] > f[s]);
            assert!(f[s] <= s as f64 + 1e-12);
        }
        for s in 0..1999 {
            assert!(f[s + 2] - f[s + 1] <= f[s + 1] - f[s] + 1e-12, "s={s}");
        }
    }

    #[test]
    fn strategies_agree() {
        for x in [0.0, 0.5, 0.94] {
            let a = hardness_bound_with(1000, x, DEFAULT_M_FRAC, KStrategy::PrefixSum).unwrap();
            let b = hardness_bound_with(1000, x, DEFAULT_M_FRAC, KStrategy::Direct).unwrap();
            assert_abs_diff_eq!(a.ratio_bound, b.ratio_bound, epsilon = 1e-12);
            assert_eq!(a.k_star, b.k_star);
        }
    }

    #[test]
    fn zero_weight_side() {
        let n = 1000;
        let f = hardness_f(n, DEFAULT_M_FRAC);
        let h = hardness_bound(n, 0.0).unwrap();
        assert_abs_diff_eq!(h.ratio_bound, (f[n - 1] + 1.0) / n as f64, epsilon = 1e-12);
        assert!(h.ratio_bound < 1.0);
    }

    #[test]
    fn last_cutoff_closed_form() {
        let n = 1000;
        let x = 0.94;
        let f = hardness_f(n, DEFAULT_M_FRAC);
        let nf = n as f64;
        let eb: f64 = x * nf;
        assert_abs_diff_eq!((f[0] + eb + 1.0) / ((1.0 + x) * nf), (x * nf + 1.0) / ((1.0 + x) * nf));
        assert!(((x * nf + 1.0) / ((1.0 + x) * nf) - 0.4845).abs() < 1e-3);
    }

    #[test]
    fn rejects_tiny_n() {
        assert!(hardness_bound(2, 0.5).is_err());
        assert!(hardness_bound(10, -1.0).is_err());
    }
}
