//! The Poisson Matching LP hierarchy and the Jaillet-Lu LP.
//!
//! Level 0 is the matching polytope. Level `ℓ ≥ 1` adds, for every `S ⊆ I` and
//! `T ⊆ J` with `|T| ≤ ℓ`, the constraint that `S × T` carries at most the
//! expected number of `S` arrivals capped at `|T|`. Those constraints are
//! generated lazily with [`separation_oracle`].

pub mod jensen;
pub mod oracle;
pub mod poisson;
pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{FractionalMatching, Instance};

pub use jensen::{
    case_split_integral, check_converse_jensen_c3, check_second_level_cj, lambda_star_solve, C3Entry, CjCheck, DrFamily,
};
pub use oracle::{separation_oracle, Cut};
pub use poisson::poisson_cdf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub matching: FractionalMatching,
    pub objective: f64,
    pub cuts_added: usize,
    pub status: LpStatus,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    i: usize,
    j: usize,
    v: f64,
}

#[derive(Serialize, Deserialize)]
struct SolutionJson {
    objective: f64,
    x: Vec<EntryJson>,
    cuts_added: usize,
    status: LpStatus,
}

impl LpSolution {
    pub fn to_json(&self, instance: &Instance) -> Result<String> {
        let x = instance
            .types
            .iter()
            .zip(&self.matching.values)
            .enumerate()
            .flat_map(|(i, (ty, row))| ty.edges.iter().zip(row).map(move |(e, v)| EntryJson { i, j: e.j, v: *v }))
            .collect();
        let doc = SolutionJson { objective: self.objective, x, cuts_added: self.cuts_added, status: self.status };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Reads a solution written by [`LpSolution::to_json`]; entries must be edges.
    pub fn from_json(instance: &Instance, s: &str) -> Result<Self> {
        let doc: SolutionJson = serde_json::from_str(s)?;
        let mut matching = FractionalMatching::zeros(instance);
        for e in doc.x {
            let k = instance
                .types
                .get(e.i)
                .and_then(|ty| ty.edges.iter().position(|ed| ed.j == e.j))
                .ok_or_else(|| Error::MatchingShape(format!("({}, {}) is not an edge", e.i, e.j)))?;
            matching.values[e.i][k] = e.v;
        }
        matching.check_shape(instance)?;
        Ok(Self { matching, objective: doc.objective, cuts_added: doc.cuts_added, status: doc.status })
    }
}

fn objective_of(instance: &Instance, x: &FractionalMatching) -> f64 {
    instance.types.iter().zip(&x.values).flat_map(|(ty, row)| ty.edges.iter().zip(row).map(|(e, v)| e.w * v)).sum()
}

fn unflatten(instance: &Instance, flat: &[f64]) -> FractionalMatching {
    let mut it = flat.iter().copied();
    FractionalMatching {
        values: instance.types.iter().map(|ty| ty.edges.iter().map(|_| it.next().unwrap_or(0.0)).collect()).collect(),
    }
}

/// Rows `Σ_j x_ij ≤ λ_i`.
fn online_rows(instance: &Instance, width: usize, a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>) {
    let mut col = 0;
    for ty in &instance.types {
        let mut row = vec![0.0; width];
        for _ in &ty.edges {
            row[col] = 1.0;
            col += 1;
        }
        a.push(row);
        b.push(ty.rate);
    }
}

/// Rows `Σ_i x_ij ≤ cap` for every offline vertex.
fn offline_rows(instance: &Instance, width: usize, cap: f64, a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>) {
    let refs = instance.edge_refs();
    for j in 0..instance.offline_count {
        let mut row = vec![0.0; width];
        for (col, &(_, _, jj)) in refs.iter().enumerate() {
            if jj == j {
                row[col] = 1.0;
            }
        }
        a.push(row);
        b.push(cap);
    }
}

/// Maximizes `Σ w_ij x_ij` over the level-`level` polytope.
///
/// Levels `≥ 1` run a cutting-plane loop seeded with the singleton cuts
/// `S = I_j, T = {j}`; every round adds the most violated cut of each `T`.
/// The returned point passes a final oracle audit at tolerance `tol`
/// (at least `1e-9`), unless the status is `IterationLimit`.
pub fn solve_lp(instance: &Instance, level: usize, tol: f64) -> Result<LpSolution> {
    instance.validate()?;
    let tol = tol.max(oracle::ORACLE_TOL);
    let n = instance.edge_count();
    let c: Vec<f64> = instance.types.iter().flat_map(|ty| ty.edges.iter().map(|e| e.w)).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    online_rows(instance, n, &mut a, &mut b);

    if level == 0 {
        offline_rows(instance, n, 1.0, &mut a, &mut b);
        let r = simplex::maximize(&c, &a, &b)?;
        let matching = unflatten(instance, &r.x);
        let objective = objective_of(instance, &matching);
        return Ok(LpSolution { matching, objective, cuts_added: 0, status: LpStatus::Optimal });
    }

    let mut cuts: Vec<Cut> = Vec::new();
    for (j, s) in instance.offline_neighbors().into_iter().enumerate() {
        if !s.is_empty() {
            let zero = FractionalMatching::zeros(instance);
            cuts.push(Cut::evaluate(instance, &zero, &s, &[j]));
        }
    }
    for cut in &cuts {
        a.push(cut.row(instance));
        b.push(cut.rhs);
    }
    let cap = 50 * instance.types.len().max(1) * instance.offline_count;
    let mut status = LpStatus::Optimal;
    loop {
        let r = simplex::maximize(&c, &a, &b)?;
        let x = unflatten(instance, &r.x);
        let xd = oracle::dense(instance, &x);
        let fresh: Vec<Cut> = oracle::violated_cuts(instance, &xd, level, tol)
            .into_iter()
            .filter(|c| !cuts.iter().any(|old| old.s == c.s && old.t == c.t))
            .collect();
        if fresh.is_empty() || cuts.len() >= cap {
            if !fresh.is_empty() || !oracle::violated_cuts(instance, &xd, level, tol).is_empty() {
                status = LpStatus::IterationLimit;
            }
            let objective = objective_of(instance, &x);
            return Ok(LpSolution { matching: x, objective, cuts_added: cuts.len(), status });
        }
        for cut in fresh {
            a.push(cut.row(instance));
            b.push(cut.rhs);
            cuts.push(cut);
        }
    }
}

/// Solves the Jaillet-Lu LP. `(2x_ij − λ_i)^+` is linearized with auxiliary
/// `u_ij ≥ 2x_ij − λ_i`, `u_ij ≥ 0`, `Σ_i u_ij ≤ 1 − ln 2`.
pub fn solve_jaillet_lu_lp(instance: &Instance, tol: f64) -> Result<LpSolution> {
    instance.validate()?;
    if tol.is_nan() || tol < 0.0 {
        return Err(invalid("tolerance must be nonnegative"));
    }
    let n = instance.edge_count();
    let width = 2 * n;
    let mut c: Vec<f64> = instance.types.iter().flat_map(|ty| ty.edges.iter().map(|e| e.w)).collect();
    c.resize(width, 0.0);
    let mut a = Vec::new();
    let mut b = Vec::new();
    online_rows(instance, width, &mut a, &mut b);
    offline_rows(instance, width, 1.0, &mut a, &mut b);
    let refs = instance.edge_refs();
    for (col, &(i, _, _)) in refs.iter().enumerate() {
        let mut row = vec![0.0; width];
        row[col] = 2.0;
        row[n + col] = -1.0;
        a.push(row);
        b.push(instance.types[i].rate);
    }
    for j in 0..instance.offline_count {
        let mut row = vec![0.0; width];
        for (col, &(_, _, jj)) in refs.iter().enumerate() {
            if jj == j {
                row[n + col] = 1.0;
            }
        }
        a.push(row);
        b.push(1.0 - std::f64::consts::LN_2);
    }
    let r = simplex::maximize(&c, &a, &b)?;
    let matching = unflatten(instance, &r.x[..n]);
    let objective = objective_of(instance, &matching);
    Ok(LpSolution { matching, objective, cuts_added: 0, status: LpStatus::Optimal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_jaillet_lu, gen_random, Edge, GenParams, OnlineType, WeightClass};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    fn k11() -> Instance {
        Instance {
            offline_count: 1,
            weight_class: WeightClass::Unweighted,
            free_disposal: false,
            types: vec![OnlineType { rate: 1.0, edges: vec![Edge { j: 0, w: 1.0 }] }],
        }
    }

    #[test]
    fn k11_level_one() {
        let s = solve_lp(&k11(), 1, 1e-9).unwrap();
        assert_abs_diff_eq!(s.objective, 1.0 - (-1.0f64).exp(), epsilon = 1e-9);
        assert_eq!(s.status, LpStatus::Optimal);
    }

    #[test]
    fn level_zero_saturates_complete_graph() {
        let p = GenParams { n_types: 4, n_offline: 3, edge_prob: 1.0, rate_range: (1.0, 1.5), ..GenParams::default() };
        let inst = gen_random(&p, 3).unwrap();
        let s = solve_lp(&inst, 0, 1e-9).unwrap();
        assert_abs_diff_eq!(s.objective, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn jaillet_lu_level_one_is_capped_by_singletons() {
        // Each offline vertex sees total rate 1 + ln 2, so x_j <= 1 - 1/(2e).
        let inst = gen_jaillet_lu();
        let s = solve_lp(&inst, 1, 1e-9).unwrap();
        assert_abs_diff_eq!(s.objective, 2.0 - (-1.0f64).exp(), epsilon = 1e-9);
        assert!(separation_oracle(&inst, &s.matching, 1).unwrap().is_none());
    }

    #[test]
    fn jaillet_lu_lp_optimum() {
        let inst = gen_jaillet_lu();
        let s = solve_jaillet_lu_lp(&inst, 1e-9).unwrap();
        assert_abs_diff_eq!(s.objective, 2.0, epsilon = 1e-9);
        let x = &s.matching;
        assert_abs_diff_eq!(x.get(&inst, 0, 0), 1.0 - LN_2, epsilon = 1e-9);
        assert_abs_diff_eq!(x.get(&inst, 1, 0), LN_2, epsilon = 1e-9);
        assert_abs_diff_eq!(x.get(&inst, 1, 1), LN_2, epsilon = 1e-9);
        assert_abs_diff_eq!(x.get(&inst, 2, 1), 1.0 - LN_2, epsilon = 1e-9);
    }

    #[test]
    fn jaillet_lu_lp_on_k11() {
        let s = solve_jaillet_lu_lp(&k11(), 1e-9).unwrap();
        assert_abs_diff_eq!(s.objective, (2.0 - LN_2) / 2.0, epsilon = 1e-9);
    }

    #[test]
    fn jaillet_lu_lp_without_edges() {
        let inst = Instance {
            offline_count: 2,
            weight_class: WeightClass::Unweighted,
            free_disposal: false,
            types: vec![OnlineType { rate: 1.0, edges: vec![] }],
        };
        assert_eq!(solve_jaillet_lu_lp(&inst, 1e-9).unwrap().objective, 0.0);
    }

    #[test]
    fn solution_json_round_trip() {
        let inst = gen_jaillet_lu();
        let s = solve_lp(&inst, 2, 1e-9).unwrap();
        let back = LpSolution::from_json(&inst, &s.to_json(&inst).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
