//! Converse Jensen checks on fractional matchings.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::{FractionalMatching, Instance};

/// Truncation point for every `λ` integral and bisection.
pub const LAMBDA_CAP: f64 = 40.0;
/// Default quadrature step for [`check_second_level_cj`].
pub const CJ_DLAMBDA: f64 = 1e-4;
/// Slack of the second-level check.
pub const CJ_SLACK: f64 = 1e-6;

/// `(1 - ln 2) / 2`.
pub fn c3_bound() -> f64 {
    0.5 * (1.0 - std::f64::consts::LN_2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct C3Entry {
    pub j: usize,
    /// `Σ_i (x_ij - λ_i/2)^+`
    pub delta: f64,
    pub pass: bool,
}

/// Per offline vertex, `Σ_i (x_ij − λ_i/2)^+` against `(1 − ln 2)/2 + tol`.
pub fn check_converse_jensen_c3(instance: &Instance, x: &FractionalMatching, tol: f64) -> Result<Vec<C3Entry>> {
    x.check_shape(instance)?;
    let mut delta = vec![0.0; instance.offline_count];
    for (ty, row) in instance.types.iter().zip(&x.values) {
        for (e, v) in ty.edges.iter().zip(row) {
            delta[e.j] += (v - 0.5 * ty.rate).max(0.0);
        }
    }
    let bound = c3_bound() + tol;
    Ok(delta.into_iter().enumerate().map(|(j, d)| C3Entry { j, delta: d, pass: d <= bound }).collect())
}

fn p0(l: f64) -> f64 {
    (-l).exp()
}

fn p1(l: f64) -> f64 {
    (-l).exp() * (1.0 + l)
}

/// Right-hand side of the `λ2*` equation; nondecreasing in `l2`.
fn lambda2_rhs(l1: f64, l2: f64) -> f64 {
    (2.0 - p0(l2) - p1(l2)) - (1.0 - p0(l1.min(l2)))
}

fn lambda1_star(x1: f64) -> f64 {
    if x1 >= 1.0 - 1e-12 {
        LAMBDA_CAP
    } else {
        (-(-x1).ln_1p()).min(LAMBDA_CAP)
    }
}

/// Solves for `(λ1*, λ2*)` without assuming `x2 ≤ x1`.
pub(crate) fn lambda_star_unordered(x1: f64, x2: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x1) || x2 < 0.0 || !x2.is_finite() {
        return Err(invalid(format!("lambda*: need x1 in [0,1] and x2 >= 0, got ({x1}, {x2})")));
    }
    let l1 = lambda1_star(x1);
    let top = lambda2_rhs(l1, LAMBDA_CAP);
    if x2 > top + 1e-12 {
        return Err(invalid(format!("lambda*: x2 = {x2} exceeds the achievable {top}")));
    }
    if x2 <= 0.0 {
        return Ok((l1, 0.0));
    }
    let (mut lo, mut hi) = (0.0, LAMBDA_CAP);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if lambda2_rhs(l1, mid) < x2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((l1, 0.5 * (lo + hi)))
}

/// `(λ1*, λ2*)` with `x1 = 1 − P_0(λ1*)` and
/// `x2 = (2 − P_0(λ2*) − P_1(λ2*)) − (1 − P_0(min{λ1*, λ2*}))`.
///
/// `λ1*` is capped at 40 once `x1 ≥ 1 − 1e-12`; `λ2*` is found by bisection
/// on `[0, 40]` to absolute tolerance `1e-12`.
pub fn lambda_star_solve(x1: f64, x2: f64) -> Result<(f64, f64)> {
    if x2 > x1 {
        return Err(invalid(format!("lambda*: need x2 <= x1, got ({x1}, {x2})")));
    }
    lambda_star_unordered(x1, x2)
}

/// Residual `x2 − RHS(λ2)` of the `λ2*` equation.
pub fn lambda2_residual(l1: f64, l2: f64, x2: f64) -> f64 {
    x2 - lambda2_rhs(l1, l2)
}

/// `f(y, z) = (A y + B (z − y)) / ((A−1)^+ y + (B−1)^+ (z − y) + 1)` with
/// `A ≥ B > 0`: normalized and DR-submodular on `0 ≤ y ≤ z ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DrFamily {
    pub a: f64,
    pub b: f64,
}

impl DrFamily {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > 0.0 && a >= b && a.is_finite()) {
            return Err(invalid(format!("DR family needs A >= B > 0, got A={a}, B={b}")));
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn eval(&self, y: f64, z: f64) -> f64 {
        let w = z - y;
        (self.a * y + self.b * w) / ((self.a - 1.0).max(0.0) * y + (self.b - 1.0).max(0.0) * w + 1.0)
    }
}

/// Composite Simpson rule on `[lo, hi]` with about `step` spacing.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let len = hi - lo;
    if len <= 0.0 {
        return 0.0;
    }
    let n = (2 * (len / (2.0 * step)).ceil() as usize).max(2);
    let h = len / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for k in 1..n {
        let v = f(lo + k as f64 * h);
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(lo) + f(hi) + 4.0 * odd + 2.0 * even)
}

/// `∫_0^{λ1} f(P0, P1) + ∫_{λ1}^{λ2} f(0, P1)` if `λ1 ≤ λ2`, else
/// `∫_0^{λ2} f(P0, P1) + ∫_{λ2}^{λ1} f(P0, P0)`.
pub fn case_split_integral(f: impl Fn(f64, f64) -> f64, l1: f64, l2: f64, dlambda: f64) -> f64 {
    let head = simpson(|l| f(p0(l), p1(l)), 0.0, l1.min(l2), dlambda);
    let tail = if l1 <= l2 {
        simpson(|l| f(0.0, p1(l)), l1, l2, dlambda)
    } else {
        simpson(|l| f(p0(l), p0(l)), l2, l1, dlambda)
    };
    head + tail
}

/// Quadrature nodes of [`case_split_integral`] as `(y, z, weight)`, so that
/// the integral of any `f` is `Σ weight·f(y, z)`.
pub(crate) fn case_split_nodes(l1: f64, l2: f64, dlambda: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    simpson_nodes(0.0, l1.min(l2), dlambda, |l, c| out.push((p0(l), p1(l), c)));
    if l1 <= l2 {
        simpson_nodes(l1, l2, dlambda, |l, c| out.push((0.0, p1(l), c)));
    } else {
        simpson_nodes(l2, l1, dlambda, |l, c| out.push((p0(l), p0(l), c)));
    }
    out
}

fn simpson_nodes(lo: f64, hi: f64, step: f64, mut emit: impl FnMut(f64, f64)) {
    let len = hi - lo;
    if len <= 0.0 {
        return;
    }
    let n = (2 * (len / (2.0 * step)).ceil() as usize).max(2);
    let h = len / n as f64;
    for k in 0..=n {
        let m = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        emit(lo + k as f64 * h, m * h / 3.0);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CjCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub pass: bool,
}

/// Second-level converse Jensen check for the pair `(j1, j2)` with quadrature
/// step `1e-4`.
pub fn check_second_level_cj(
    instance: &Instance,
    x: &FractionalMatching,
    j1: usize,
    j2: usize,
    f: DrFamily,
) -> Result<CjCheck> {
    check_second_level_cj_with(instance, x, j1, j2, f, CJ_DLAMBDA)
}

pub fn check_second_level_cj_with(
    instance: &Instance,
    x: &FractionalMatching,
    j1: usize,
    j2: usize,
    f: DrFamily,
    dlambda: f64,
) -> Result<CjCheck> {
    let f = DrFamily::new(f.a, f.b)?;
    if j1 == j2 || j1 >= instance.offline_count || j2 >= instance.offline_count {
        return Err(invalid(format!("need two distinct offline vertices, got ({j1}, {j2})")));
    }
    x.check_shape(instance)?;
    let mut lhs = 0.0;
    for (i, ty) in instance.types.iter().enumerate() {
        let r1 = x.get(instance, i, j1) / ty.rate;
        let r2 = x.get(instance, i, j2) / ty.rate;
        lhs += ty.rate * f.eval(r1, r1 + r2);
    }
    let loads = x.loads(instance);
    let (l1, l2) = lambda_star_unordered(loads[j1].min(1.0), loads[j2])?;
    let rhs = case_split_integral(|y, z| f.eval(y, z), l1, l2, dlambda);
    Ok(CjCheck { lhs, rhs, lambda1: l1, lambda2: l2, pass: lhs >= rhs - CJ_SLACK })
}
