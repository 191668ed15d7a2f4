//! First-level Poisson OCS recurrence for the unmatched probability `p_x(t)`.

use serde::Serialize;

use super::VerifierReport;
use crate::error::{invalid, Error, Result};

const SANDWICH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstLevelCurve {
    pub dt: f64,
    /// `(x, (1 − p_x(1))/x)`
    pub points: Vec<(f64, f64)>,
    pub min_ratio: f64,
    pub argmin_x: f64,
}

/// `{step, 2·step, …, 1}`.
pub fn default_x_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (1..=n).map(|k| k as f64 / n as f64).collect()
}

fn slope(p: f64, t: f64, x: f64) -> f64 {
    let delta = 1.0 - (-2.0 * x * t).exp() / p;
    if delta.abs() < 1e-9 {
        -p * x
    } else {
        p * (-x * delta).ln_1p() / delta
    }
}

/// `p_x(1)` by classical RK4, checking `e^{−2xt} ≤ p ≤ e^{−xt}` at every step.
fn unmatched_at_one(x: f64, dt: f64) -> Result<f64> {
    let steps = (1.0 / dt).round() as usize;
    let h = 1.0 / steps as f64;
    let mut p = 1.0;
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = slope(p, t, x);
        let k2 = slope(p + 0.5 * h * k1, t + 0.5 * h, x);
        let k3 = slope(p + 0.5 * h * k2, t + 0.5 * h, x);
        let k4 = slope(p + h * k3, t + h, x);
        p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t1 = (k + 1) as f64 * h;
        let (lo, hi) = ((-2.0 * x * t1).exp(), (-x * t1).exp());
        if p < lo - SANDWICH_TOL || p > hi + SANDWICH_TOL {
            return Err(Error::Numerical(format!("first level: p={p} outside [{lo}, {hi}] at x={x}, t={t1}")));
        }
    }
    Ok(p)
}

pub fn first_level_curve(dt: f64, x_grid: &[f64]) -> Result<FirstLevelCurve> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(invalid(format!("first level needs 0 < dt <= 0.1, got {dt}")));
    }
    if x_grid.is_empty() || x_grid.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(invalid("first level needs a nonempty grid inside (0, 1]"));
    }
    let points = x_grid.iter().map(|&x| Ok((x, (1.0 - unmatched_at_one(x, dt)?) / x))).collect::<Result<Vec<_>>>()?;
    let (argmin_x, min_ratio) =
        points.iter().copied().fold((f64::NAN, f64::INFINITY), |b, p| if p.1 < b.1 { p } else { b });
    Ok(FirstLevelCurve { dt, points, min_ratio, argmin_x })
}

pub fn first_level_report(dt: f64, x_step: f64) -> Result<VerifierReport> {
    let c = first_level_curve(dt, &default_x_grid(x_step))?;
    let at_one = c.points.last().map_or(f64::NAN, |p| p.1);
    let pass = (0.7070..=0.7080).contains(&at_one) && c.min_ratio >= 0.707 - 1e-4;
    let mut r =
        VerifierReport::new("first-level", "1 - p_1(1) in [0.7070, 0.7080] and min ratio >= 0.707 - 1e-4", pass)
            .value("ratio_at_one", at_one)
            .value("min_ratio", c.min_ratio)
            .value("argmin_x", c.argmin_x)
            .param("dt", dt)
            .param("x_step", x_step);
    r.table = c.points;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn x_equals_one_value() {
        let c = first_level_curve(1e-4, &[1.0]).unwrap();
        assert!((c.points[0].1 - 0.7075).abs() < 5e-4, "{}", c.points[0].1);
    }

    #[test]
    fn small_x_ratio_is_near_one() {
        let c = first_level_curve(1e-4, &[0.01]).unwrap();
        assert!((0.95..=1.0).contains(&c.points[0].1), "{}", c.points[0].1);
    }

    #[test]
    fn halving_dt_is_stable() {
        let a = first_level_curve(1e-4, &[1.0]).unwrap().points[0].1;
        let b = first_level_curve(5e-5, &[1.0]).unwrap().points[0].1;
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn grid_and_dt_are_validated() {
        assert!(first_level_curve(1e-3, &[0.0]).is_err());
        assert!(first_level_curve(0.0, &[0.5]).is_err());
        assert_eq!(default_x_grid(0.25), vec![0.25, 0.5, 0.75, 1.0]);
    }
}
