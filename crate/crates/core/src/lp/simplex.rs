//! Dense tableau simplex for `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The slack basis is feasible, so no phase one is needed. Pricing is
//! Dantzig's rule, falling back to Bland's rule after a run of degenerate
//! pivots, which rules out cycling.

use crate::error::{Error, Result};

pub const TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Solves the LP. Rows of `a` must have `c.len()` entries.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<SimplexResult> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::Numerical("constraint matrix shape mismatch".into()));
    }
    if b.iter().any(|v| !(v.is_finite() && *v >= -TOL)) {
        return Err(Error::Numerical("right-hand side must be nonnegative".into()));
    }
    let width = n + m + 1;
    let rhs = n + m;
    let mut tab = vec![0.0; m * width];
    for (r, row) in a.iter().enumerate() {
        let line = &mut tab[r * width..(r + 1) * width];
        line[..n].copy_from_slice(row);
        line[n + r] = 1.0;
        line[rhs] = b[r].max(0.0);
    }
    // Reduced costs; obj[rhs] holds minus the current objective.
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (n + m).max(10) * (n + m).max(10);
    let mut pivots = 0;
    let mut streak = 0;
    loop {
        let bland = streak >= DEGENERATE_STREAK;
        let mut enter = None;
        let mut best = TOL;
        for (col, &rc) in obj[..n + m].iter().enumerate() {
            if rc > best {
                enter = Some(col);
                if bland {
                    break;
                }
                best = rc;
            }
        }
        let Some(e) = enter else { break };

        let mut leave: Option<usize> = None;
        let mut ratio = f64::INFINITY;
        for r in 0..m {
            let coef = tab[r * width + e];
            if coef > TOL {
                let q = tab[r * width + rhs] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => q < ratio - TOL || (q <= ratio + TOL && basis[r] < basis[l]),
                };
                if better {
                    ratio = q;
                    leave = Some(r);
                }
            }
        }
        let Some(l) = leave else {
            return Err(Error::Numerical("linear program is unbounded".into()));
        };

        streak = if ratio <= TOL { streak + 1 } else { 0 };
        pivot(&mut tab, &mut obj, width, m, l, e);
        basis[l] = e;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numerical(format!("simplex exceeded {max_pivots} pivots")));
        }
    }

    let mut x = vec![0.0; n];
    for (r, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = tab[r * width + rhs].max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(SimplexResult { x, objective, pivots })
}

fn pivot(tab: &mut [f64], obj: &mut [f64], width: usize, m: usize, l: usize, e: usize) {
    let p = tab[l * width + e];
    for v in &mut tab[l * width..(l + 1) * width] {
        *v /= p;
    }
    let prow: Vec<f64> = tab[l * width..(l + 1) * width].to_vec();
    for r in 0..m {
        if r == l {
            continue;
        }
        let f = tab[r * width + e];
        if f != 0.0 {
            for (v, pv) in tab[r * width..(r + 1) * width].iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            tab[r * width + e] = 0.0;
        }
    }
    let f = obj[e];
    if f != 0.0 {
        for (v, pv) in obj.iter_mut().zip(&prow) {
            *v -= f * pv;
        }
        obj[e] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y  s.t.  x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  →  (2, 6), 36
        let r = maximize(&[3.0, 5.0], &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]], &[4.0, 12.0, 18.0]).unwrap();
        assert_abs_diff_eq!(r.objective, 36.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.x[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.x[1], 6.0, epsilon = 1e-9);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize(&[1.0, 0.0], &[vec![0.0, 1.0]], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Many redundant rows through the origin.
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 0..20 {
            a.push(vec![1.0, -(k as f64) / 10.0, 0.5]);
            b.push(0.0);
        }
        a.push(vec![1.0, 1.0, 1.0]);
        b.push(1.0);
        let r = maximize(&[1.0, 1.0, 1.0], &a, &b).unwrap();
        assert_abs_diff_eq!(r.objective, 1.0, epsilon = 1e-9);
    }

    fn brute_force_2d(c: [f64; 2], a: &[[f64; 2]], b: &[f64]) -> f64 {
        // Enumerate vertices of the 2-d polytope including the axes.
        let mut lines: Vec<([f64; 2], f64)> = a.iter().copied().zip(b.iter().copied()).collect();
        lines.push(([1.0, 0.0], 0.0));
        lines.push(([0.0, 1.0], 0.0));
        let feasible = |p: [f64; 2]| {
            p[0] >= -1e-9 && p[1] >= -1e-9 && a.iter().zip(b).all(|(r, bi)| r[0] * p[0] + r[1] * p[1] <= bi + 1e-9)
        };
        let mut best = f64::NEG_INFINITY;
        for (p, q) in lines.iter().enumerate().flat_map(|(k, p)| lines[k + 1..].iter().map(move |q| (p, q))) {
            let det = p.0[0] * q.0[1] - p.0[1] * q.0[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let pt = [(p.1 * q.0[1] - p.0[1] * q.1) / det, (p.0[0] * q.1 - p.1 * q.0[0]) / det];
            if feasible(pt) {
                best = best.max(c[0] * pt[0] + c[1] * pt[1]);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration_in_2d(
            c in prop::array::uniform2(0.0f64..5.0),
            rows in prop::collection::vec((prop::array::uniform2(0.05f64..3.0), 0.0f64..4.0), 1..6),
        ) {
            let a: Vec<[f64; 2]> = rows.iter().map(|r| r.0).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let dense: Vec<Vec<f64>> = a.iter().map(|r| r.to_vec()).collect();
            let r = maximize(&c, &dense, &b).unwrap();
            let want = brute_force_2d(c, &a, &b);
            prop_assert!((r.objective - want).abs() <= 1e-7 * want.abs().max(1.0));
        }
    }
}
