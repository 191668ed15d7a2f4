//! Closed-form constants of Top Half Sampling and the Jaillet-Lu instance.

use std::f64::consts::{E, LN_2};

use serde::Serialize;

use super::VerifierReport;
use crate::error::{invalid, Result};

/// `Γ = 1 − (1/(1−ln 2))·(1/(2e) − ln 2/e²) ≈ 0.7062681`.
pub fn top_half_gamma() -> f64 {
    1.0 - (1.0 / (1.0 - LN_2)) * (1.0 / (2.0 * E) - LN_2 / (E * E))
}

/// `B(t) = ((2e)^{−t} − ln 2·e^{−2t}) / (1 − ln 2)`, the equality solution of
/// the Top Half differential inequality with `B(0) = 1`, `B'(0) = −1`.
pub fn top_half_b(t: f64) -> f64 {
    ((-(1.0 + LN_2) * t).exp() - LN_2 * (-2.0 * t).exp()) / (1.0 - LN_2)
}

fn top_half_b_prime(t: f64) -> f64 {
    (-(1.0 + LN_2) * (-(1.0 + LN_2) * t).exp() + 2.0 * LN_2 * (-2.0 * t).exp()) / (1.0 - LN_2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeCheck {
    pub dt: f64,
    /// `max_t |(2+2ln2)B + (3+ln2)B' + B''|` with central differences.
    pub max_residual: f64,
    pub b0: f64,
    pub b_prime0: f64,
    pub b1: f64,
}

/// Finite-difference residual of `B` against its second-order equation on
/// the grid `t = 0, dt, …, 1`.
pub fn top_half_ode_check(dt: f64) -> Result<OdeCheck> {
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(invalid("top half ODE check needs 0 < dt <= 1e-3"));
    }
    let steps = (1.0 / dt).round() as usize;
    let mut max_residual: f64 = 0.0;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let (bm, b, bp) = (top_half_b(t - dt), top_half_b(t), top_half_b(t + dt));
        let d1 = (bp - bm) / (2.0 * dt);
        let d2 = (bp - 2.0 * b + bm) / (dt * dt);
        let r = (2.0 + 2.0 * LN_2) * b + (3.0 + LN_2) * d1 + d2;
        max_residual = max_residual.max(r.abs());
    }
    Ok(OdeCheck { dt, max_residual, b0: top_half_b(0.0), b_prime0: top_half_b_prime(0.0), b1: top_half_b(1.0) })
}

pub fn top_half_ode_report(dt: f64) -> Result<VerifierReport> {
    let c = top_half_ode_check(dt)?;
    let gamma = top_half_gamma();
    let pass = c.max_residual <= 1e-5
        && (c.b0 - 1.0).abs() <= 1e-10
        && (c.b_prime0 + 1.0).abs() <= 1e-10
        && (c.b1 - (1.0 - gamma)).abs() <= 1e-10;
    Ok(VerifierReport::new("top-half-ode", "residual <= 1e-5, B(0) = 1, B'(0) = -1, B(1) = 1 - gamma", pass)
        .value("max_residual", c.max_residual)
        .value("b0", c.b0)
        .value("b_prime0", c.b_prime0)
        .value("b1", c.b1)
        .param("dt", dt))
}

pub fn top_half_gamma_report() -> VerifierReport {
    let g = top_half_gamma();
    VerifierReport::new("top-half", "gamma > 0.7062", g > 0.7062).value("gamma", g).value("one_minus_gamma", 1.0 - g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JailletLuClosedForm {
    pub alg: f64,
    pub ratio: f64,
    /// `Pr[t unmatched] = Pr[n_T = n_M = 0] = e^{−(1+ln 2)}`
    pub t_unmatched: f64,
    /// `Pr[n_B = 0, n_M = 1, first arrival is M]`
    pub b_lost_to_m: f64,
}

/// Greedy (ties to `t`) on the Jaillet-Lu instance, against LP value 2.
pub fn jaillet_lu_closed_form() -> JailletLuClosedForm {
    let t_unmatched = (-(1.0 + LN_2)).exp();
    let b_lost_to_m = t_unmatched * (2.0 * LN_2 / (1.0 - LN_2)) * (1.0 - 2.0 / E);
    let alg = 2.0 - t_unmatched - (t_unmatched + b_lost_to_m);
    JailletLuClosedForm { alg, ratio: alg / 2.0, t_unmatched, b_lost_to_m }
}

pub fn jaillet_lu_report() -> VerifierReport {
    let c = jaillet_lu_closed_form();
    let g = top_half_gamma();
    let pass = (c.ratio - g).abs() <= 1e-14 && (c.ratio - 0.706).abs() < 5e-4;
    VerifierReport::new("jl", "ratio equals gamma to 1e-14 and rounds to 0.706", pass)
        .value("alg", c.alg)
        .value("ratio", c.ratio)
        .value("t_unmatched", c.t_unmatched)
        .value("b_lost_to_m", c.b_lost_to_m)
        .value("gamma", g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_value() {
        let g = top_half_gamma();
        assert!(g > 0.7062 && g < 0.7063);
        assert_abs_diff_eq!(g, 0.7062681361557791, epsilon = 1e-15);
        assert_abs_diff_eq!(1.0 - g, 0.2937318638442209, epsilon = 1e-15);
    }

    #[test]
    fn ode_boundary_values() {
        assert_abs_diff_eq!(top_half_b(0.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(top_half_b(1.0), 1.0 - top_half_gamma(), epsilon = 1e-14);
        let c = top_half_ode_check(1e-4).unwrap();
        assert!(c.max_residual <= 1e-5, "{}", c.max_residual);
        assert_abs_diff_eq!(c.b_prime0, -1.0, epsilon = 1e-14);
        assert!(top_half_ode_check(1e-2).is_err());
    }

    #[test]
    fn jaillet_lu_identity() {
        let c = jaillet_lu_closed_form();
        assert_abs_diff_eq!(c.t_unmatched, 1.0 / (2.0 * E), epsilon = 1e-16);
        assert_abs_diff_eq!(c.t_unmatched, 0.183940, epsilon = 1e-6);
        assert_abs_diff_eq!(c.alg, 2.0 * top_half_gamma(), epsilon = 1e-14);
        assert_abs_diff_eq!(c.alg, 1.4125362723115582, epsilon = 1e-14);
        assert!(jaillet_lu_report().pass);
    }
}
