//! Exact expectations in the fixed-arrival model, for tiny instances.
//!
//! Arrival `k` of `Λ` comes at time `k/Λ` with type `i` w.p. `λ_i / Σλ`.
//! `E[ALG]` propagates the distribution of match states one arrival at a time
//! using each algorithm's closed-form step law; `E[OPT]` enumerates every type
//! sequence.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FractionalMatching, Instance};
use crate::offline::Hungarian;
use crate::online::{AlgoChoice, MatchState, OnlineContext};

const MAX_SEQUENCES: f64 = 4e6;
const MAX_STATES: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExactValue {
    pub alg: f64,
    pub opt: f64,
}

fn key(state: &MatchState) -> Vec<u64> {
    state.best_weight.iter().map(|w| w.to_bits()).collect()
}

pub fn exact_expected_value(
    instance: &Instance,
    x: &FractionalMatching,
    algo: AlgoChoice,
    lambda: usize,
) -> Result<ExactValue> {
    instance.validate()?;
    let ctx = OnlineContext::new(instance, x)?;
    ctx.check_algo(algo)?;
    if lambda == 0 {
        return Ok(ExactValue { alg: 0.0, opt: 0.0 });
    }
    let n_types = instance.types.len();
    let sequences = (n_types as f64).powi(lambda as i32);
    if sequences > MAX_SEQUENCES {
        return Err(Error::Budget(format!("{n_types}^{lambda} type sequences exceed {MAX_SEQUENCES}")));
    }
    let total: f64 = instance.total_rate();
    let probs: Vec<f64> = instance.types.iter().map(|t| t.rate / total).collect();

    let mut dist: BTreeMap<Vec<u64>, (MatchState, f64)> = BTreeMap::new();
    let start = MatchState::new(instance.offline_count);
    dist.insert(key(&start), (start, 1.0));
    for k in 1..=lambda {
        let t = k as f64 / lambda as f64;
        let mut next: BTreeMap<Vec<u64>, (MatchState, f64)> = BTreeMap::new();
        for (state, p) in dist.values() {
            for (i, &pi) in probs.iter().enumerate() {
                for (outcome, q) in ctx.decision_distribution(algo, state, i, t) {
                    let mass = p * pi * q;
                    if mass == 0.0 {
                        continue;
                    }
                    let mut s = state.clone();
                    s.time = t;
                    if let Some(j) = outcome {
                        ctx.apply_choice(&mut s, i, j);
                    }
                    next.entry(key(&s)).and_modify(|e| e.1 += mass).or_insert((s, mass));
                }
            }
        }
        if next.len() > MAX_STATES {
            return Err(Error::Budget(format!("more than {MAX_STATES} reachable match states")));
        }
        dist = next;
    }
    let alg = dist.values().map(|(s, p)| p * s.objective).sum();

    let cols = instance.offline_count;
    let mut seq = vec![0usize; lambda];
    let mut w = vec![0.0; lambda * cols];
    let mut hung = Hungarian::default();
    let mut opt = 0.0;
    loop {
        w.iter_mut().for_each(|v| *v = 0.0);
        let mut p = 1.0;
        for (a, &i) in seq.iter().enumerate() {
            p *= probs[i];
            for e in &instance.types[i].edges {
                w[a * cols + e.j] = e.w;
            }
        }
        opt += p * hung.solve(&w, lambda, cols);
        // odometer
        let mut pos = 0;
        while pos < lambda {
            seq[pos] += 1;
            if seq[pos] < n_types {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
        if pos == lambda {
            break;
        }
    }
    Ok(ExactValue { alg, opt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{gen_jaillet_lu, Edge, OnlineType, WeightClass};
    use approx::assert_abs_diff_eq;

    fn k11() -> Instance {
        Instance {
            offline_count: 1,
            weight_class: WeightClass::Unweighted,
            free_disposal: false,
            types: vec![OnlineType { rate: 1.0, edges: vec![Edge { j: 0, w: 1.0 }] }],
        }
    }

    #[test]
    fn zero_arrivals() {
        let inst = k11();
        let v = exact_expected_value(&inst, &FractionalMatching::zeros(&inst), AlgoChoice::Greedy, 0).unwrap();
        assert_eq!(v, ExactValue { alg: 0.0, opt: 0.0 });
    }

    #[test]
    fn single_arrival_ocs_matches() {
        let inst = k11();
        let x = FractionalMatching { values: vec![vec![0.5]] };
        let v = exact_expected_value(&inst, &x, AlgoChoice::PoissonOCS, 1).unwrap();
        assert_abs_diff_eq!(v.alg, 1.0);
        assert_abs_diff_eq!(v.opt, 1.0);
    }

    #[test]
    fn suggested_on_k11_is_one_minus_rejections() {
        // Each of Λ arrivals proposes with probability x/λ.
        let inst = k11();
        let x = FractionalMatching { values: vec![vec![0.4]] };
        let v = exact_expected_value(&inst, &x, AlgoChoice::SuggestedMatching, 3).unwrap();
        assert_abs_diff_eq!(v.alg, 1.0 - 0.6f64.powi(3), epsilon = 1e-15);
    }

    #[test]
    fn greedy_jaillet_lu_two_arrivals() {
        // Greedy is optimal on two arrivals of this instance except T,T / B,B.
        let inst = gen_jaillet_lu();
        let v = exact_expected_value(&inst, &FractionalMatching::zeros(&inst), AlgoChoice::Greedy, 2).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let (pt, pm) = ((1.0 - ln2) / 2.0, ln2);
        // ALG loses one unit on T,T / B,B, and on M then T (M takes t).
        let want_alg = 2.0 - 2.0 * pt * pt - pm * pt;
        assert_abs_diff_eq!(v.alg, want_alg, epsilon = 1e-12);
        assert_abs_diff_eq!(v.opt, 2.0 - 2.0 * pt * pt, epsilon = 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = gen_jaillet_lu();
        let r = exact_expected_value(&inst, &FractionalMatching::zeros(&inst), AlgoChoice::Greedy, 20);
        assert!(matches!(r, Err(Error::Budget(_))));
    }
}
