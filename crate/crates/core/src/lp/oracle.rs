//! Separation oracle for the hierarchy constraints
//! `Σ_{i∈S, j∈T} x_ij ≤ E[min(Poisson(λ_S), |T|)]`.
//!
//! For a fixed `T` the right-hand side depends on `S` only through `λ_S`, so
//! among sets of equal rate the best `S` packs the largest values of
//! `Σ_{j∈T} x_ij / λ_i`. Scanning prefixes of that order therefore finds the
//! most violated `S`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lp::poisson::expected_capped_arrivals;
use crate::model::{FractionalMatching, Instance};

/// Violations at or below this are treated as feasible.
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    /// Online types, ascending.
    pub s: Vec<usize>,
    /// Offline vertices, ascending.
    pub t: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: f64,
}

impl Cut {
    /// Evaluates the constraint `(S, T)` at `x`.
    pub fn evaluate(instance: &Instance, x: &FractionalMatching, s: &[usize], t: &[usize]) -> Cut {
        let lambda_s: f64 = s.iter().map(|&i| instance.types[i].rate).sum();
        let lhs: f64 = s.iter().flat_map(|&i| t.iter().map(move |&j| (i, j))).map(|(i, j)| x.get(instance, i, j)).sum();
        let rhs = expected_capped_arrivals(t.len() as u32, lambda_s);
        let mut s = s.to_vec();
        let mut t = t.to_vec();
        s.sort_unstable();
        t.sort_unstable();
        Cut { s, t, lhs, rhs, violation: lhs - rhs }
    }

    /// Coefficient row over the flat edge list of `instance`.
    pub fn row(&self, instance: &Instance) -> Vec<f64> {
        let mut in_t = vec![false; instance.offline_count];
        for &j in &self.t {
            in_t[j] = true;
        }
        let mut in_s = vec![false; instance.types.len()];
        for &i in &self.s {
            in_s[i] = true;
        }
        instance
            .types
            .iter()
            .enumerate()
            .flat_map(|(i, ty)| ty.edges.iter().map(move |e| (i, e.j)))
            .map(|(i, j)| if in_s[i] && in_t[j] { 1.0 } else { 0.0 })
            .collect()
    }
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m == 0 || m > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..m).rev().find(|&p| idx[p] != p + n - m) else {
            return out;
        };
        idx[pos] += 1;
        for q in pos + 1..m {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Dense `|I| × |J|` copy of `x`.
pub(crate) fn dense(instance: &Instance, x: &FractionalMatching) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; instance.offline_count]; instance.types.len()];
    for (i, (ty, row)) in instance.types.iter().zip(&x.values).enumerate() {
        for (e, v) in ty.edges.iter().zip(row) {
            d[i][e.j] = *v;
        }
    }
    d
}

/// Best prefix cut for one `T`, if its violation exceeds `tol`.
fn best_for_t(instance: &Instance, xd: &[Vec<f64>], t: &[usize], tol: f64) -> Option<Cut> {
    let mut order: Vec<(usize, f64)> = xd
        .iter()
        .enumerate()
        .map(|(i, row)| (i, t.iter().map(|&j| row[j]).sum::<f64>()))
        .filter(|&(_, mass)| mass > 0.0)
        .collect();
    order.sort_by(|a, b| {
        let ra = a.1 / instance.types[a.0].rate;
        let rb = b.1 / instance.types[b.0].rate;
        rb.total_cmp(&ra).then(a.0.cmp(&b.0))
    });
    let m = t.len() as u32;
    let (mut lhs, mut lambda_s) = (0.0, 0.0);
    let mut best: Option<(usize, f64, f64)> = None;
    for (k, &(i, mass)) in order.iter().enumerate() {
        lhs += mass;
        lambda_s += instance.types[i].rate;
        let rhs = expected_capped_arrivals(m, lambda_s);
        let v = lhs - rhs;
        if v > tol && best.is_none_or(|(_, r, l)| v > l - r) {
            best = Some((k, rhs, lhs));
        }
    }
    best.map(|(k, rhs, lhs)| {
        let mut s: Vec<usize> = order[..=k].iter().map(|p| p.0).collect();
        s.sort_unstable();
        Cut { s, t: t.to_vec(), lhs, rhs, violation: lhs - rhs }
    })
}

/// Most violated cut of each `T` (`1 ≤ |T| ≤ level`), in enumeration order:
/// by `|T|`, then lexicographically.
pub(crate) fn violated_cuts(instance: &Instance, xd: &[Vec<f64>], level: usize, tol: f64) -> Vec<Cut> {
    let mut out = Vec::new();
    for m in 1..=level.min(instance.offline_count) {
        for t in combinations(instance.offline_count, m) {
            if let Some(c) = best_for_t(instance, xd, &t, tol) {
                out.push(c);
            }
        }
    }
    out
}

/// Most violated hierarchy constraint of level `level` at `x`, or `None` if
/// every violation is at most `1e-9`. Ties keep the first `T` enumerated.
pub fn separation_oracle(instance: &Instance, x: &FractionalMatching, level: usize) -> Result<Option<Cut>> {
    if level < 1 {
        return Err(invalid("separation oracle needs level >= 1"));
    }
    x.check_shape(instance)?;
    let xd = dense(instance, x);
    let mut best: Option<Cut> = None;
    for c in violated_cuts(instance, &xd, level, ORACLE_TOL) {
        if best.as_ref().is_none_or(|b| c.violation > b.violation) {
            best = Some(c);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, OnlineType, WeightClass};

    fn two_types_one_vertex() -> Instance {
        Instance {
            offline_count: 1,
            weight_class: WeightClass::Unweighted,
            free_disposal: false,
            types: vec![
                OnlineType { rate: 1.0, edges: vec![Edge { j: 0, w: 1.0 }] },
                OnlineType { rate: 1.0, edges: vec![Edge { j: 0, w: 1.0 }] },
            ],
        }
    }

    #[test]
    fn lexicographic_combinations() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn zero_is_feasible() {
        let inst = two_types_one_vertex();
        let x = FractionalMatching::zeros(&inst);
        assert_eq!(separation_oracle(&inst, &x, 1).unwrap(), None);
    }

    #[test]
    fn finds_the_pair_cut() {
        let inst = two_types_one_vertex();
        let x = FractionalMatching { values: vec![vec![0.45], vec![0.45]] };
        let cut = separation_oracle(&inst, &x, 1).unwrap().unwrap();
        assert_eq!(cut.s, vec![0, 1]);
        assert_eq!(cut.t, vec![0]);
        assert!((cut.lhs - 0.9).abs() < 1e-15);
        assert!((cut.rhs - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        // Brute force over the three nonempty S.
        let all = [vec![0], vec![1], vec![0, 1]].map(|s| Cut::evaluate(&inst, &x, &s, &[0]).violation);
        let best = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((cut.violation - best).abs() < 1e-15);
    }

    #[test]
    fn nothing_violated_at_030() {
        let inst = two_types_one_vertex();
        let x = FractionalMatching { values: vec![vec![0.3], vec![0.3]] };
        assert_eq!(separation_oracle(&inst, &x, 1).unwrap(), None);
    }

    #[test]
    fn level_zero_is_rejected() {
        let inst = two_types_one_vertex();
        assert!(separation_oracle(&inst, &FractionalMatching::zeros(&inst), 0).is_err());
    }

    #[test]
    fn row_marks_s_times_t() {
        let inst = crate::model::gen_jaillet_lu();
        let cut = Cut { s: vec![1, 2], t: vec![1], lhs: 0.0, rhs: 0.0, violation: 0.0 };
        // edges: (T,t) (M,t) (M,b) (B,b)
        assert_eq!(cut.row(&inst), vec![0.0, 0.0, 1.0, 1.0]);
    }
}
