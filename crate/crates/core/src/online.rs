//! Online algorithms as step functions over a [`MatchState`].
//!
//! Every step consumes exactly one uniform `u ∈ [0, 1)`, so runs are
//! reproducible and single-step probabilities can be computed in closed form
//! by [`OnlineContext::decision_distribution`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FractionalMatching, Instance, WeightClass};
use crate::seeds::derived_rng;
use crate::sim::ArrivalSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgoChoice {
    #[serde(rename = "suggested")]
    SuggestedMatching,
    #[serde(rename = "top-half")]
    TopHalfSampling,
    #[serde(rename = "ocs")]
    PoissonOCS,
    #[serde(rename = "greedy")]
    Greedy,
}

impl AlgoChoice {
    pub const ALL: [AlgoChoice; 4] =
        [AlgoChoice::SuggestedMatching, AlgoChoice::TopHalfSampling, AlgoChoice::PoissonOCS, AlgoChoice::Greedy];

    pub fn name(self) -> &'static str {
        match self {
            AlgoChoice::SuggestedMatching => "suggested",
            AlgoChoice::TopHalfSampling => "top-half",
            AlgoChoice::PoissonOCS => "ocs",
            AlgoChoice::Greedy => "greedy",
        }
    }
}

impl fmt::Display for AlgoChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgoChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AlgoChoice::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown algorithm '{s}' (suggested|top-half|ocs|greedy)")))
    }
}

/// Per offline vertex: best matched weight and matched flag; plus the total.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchState {
    pub best_weight: Vec<f64>,
    pub matched: Vec<bool>,
    pub objective: f64,
    pub time: f64,
}

impl MatchState {
    pub fn new(offline_count: usize) -> Self {
        Self { best_weight: vec![0.0; offline_count], matched: vec![false; offline_count], objective: 0.0, time: 0.0 }
    }

    pub fn reset(&mut self) {
        self.best_weight.iter_mut().for_each(|w| *w = 0.0);
        self.matched.iter_mut().for_each(|m| *m = false);
        self.objective = 0.0;
        self.time = 0.0;
    }
}

/// Outcome of one step: the vertex (re)matched, if any, and the gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub chosen: Option<usize>,
    pub gain: f64,
}

impl Decision {
    const NONE: Decision = Decision { chosen: None, gain: 0.0 };
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub i: usize,
    pub chosen: Option<usize>,
    pub gain: f64,
}

/// Writes `t,type,chosen_j,marginal_gain` rows, with `-1` for no match.
pub fn write_trace_csv(mut out: impl Write, trace: &[TraceRow]) -> Result<()> {
    writeln!(out, "t,type,chosen_j,marginal_gain")?;
    for r in trace {
        let j = r.chosen.map_or(-1, |j| j as i64);
        writeln!(out, "{},{},{},{}", r.t, r.i, j, r.gain)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct Slot {
    j: usize,
    w: f64,
    x: f64,
}

/// Instance and fractional matching with per-type slots precomputed.
#[derive(Clone, Debug)]
pub struct OnlineContext<'a> {
    pub instance: &'a Instance,
    /// Offline loads `x_j`.
    pub loads: Vec<f64>,
    /// Per type, neighbors in ascending offline index.
    slots: Vec<Vec<Slot>>,
    disposal: bool,
}

impl<'a> OnlineContext<'a> {
    pub fn new(instance: &'a Instance, x: &FractionalMatching) -> Result<Self> {
        x.check_shape(instance)?;
        let slots = instance
            .types
            .iter()
            .zip(&x.values)
            .map(|(ty, row)| {
                let mut s: Vec<Slot> = ty.edges.iter().zip(row).map(|(e, v)| Slot { j: e.j, w: e.w, x: *v }).collect();
                s.sort_by_key(|s| s.j);
                s
            })
            .collect();
        Ok(Self { instance, loads: x.loads(instance), slots, disposal: instance.disposal_applies() })
    }

    /// Rejects algorithm and instance combinations without a guarantee.
    pub fn check_algo(&self, algo: AlgoChoice) -> Result<()> {
        let mismatch = |reason: &str| Err(Error::AlgoMismatch { algo: algo.to_string(), reason: reason.into() });
        match algo {
            AlgoChoice::PoissonOCS => {
                if self.instance.weight_class == WeightClass::EdgeWeighted {
                    return mismatch("needs an unweighted or vertex-weighted instance");
                }
                if let Some((j, l)) = self.loads.iter().enumerate().find(|(_, l)| **l > 1.0 + 1e-9) {
                    return mismatch(&format!("offline load x_{j} = {l} exceeds 1"));
                }
            }
            AlgoChoice::TopHalfSampling => {
                if self.instance.weight_class == WeightClass::EdgeWeighted && !self.instance.free_disposal {
                    return mismatch("edge-weighted instances need free disposal");
                }
            }
            AlgoChoice::SuggestedMatching | AlgoChoice::Greedy => {}
        }
        Ok(())
    }

    /// Gain of matching `(i, j)` with weight `w` in the current state.
    #[inline]
    fn marginal(&self, state: &MatchState, j: usize, w: f64) -> f64 {
        if self.disposal {
            (w - state.best_weight[j]).max(0.0)
        } else if state.matched[j] {
            0.0
        } else {
            w
        }
    }

    /// Matches `i` to `j` if that gains anything.
    fn apply(&self, state: &mut MatchState, j: usize, w: f64) -> Decision {
        let gain = self.marginal(state, j, w);
        if gain <= 0.0 {
            return Decision::NONE;
        }
        state.best_weight[j] = state.best_weight[j].max(w);
        state.matched[j] = true;
        state.objective += gain;
        Decision { chosen: Some(j), gain }
    }

    /// Applies an outcome of [`Self::decision_distribution`].
    pub fn apply_choice(&self, state: &mut MatchState, i: usize, j: usize) -> Decision {
        match self.slots[i].iter().find(|s| s.j == j) {
            Some(s) => self.apply(state, j, s.w),
            None => Decision::NONE,
        }
    }

    /// Neighbors in the order `≻_{i,t}`: marginal descending, then index.
    fn top_half_order(&self, state: &MatchState, i: usize) -> Vec<(&Slot, f64)> {
        let mut order: Vec<(&Slot, f64)> = self.slots[i].iter().map(|s| (s, self.marginal(state, s.j, s.w))).collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.j.cmp(&b.0.j)));
        order
    }

    pub fn top_half_step(&self, state: &mut MatchState, i: usize, t: f64, u: f64) -> Decision {
        state.time = t;
        let theta = u * self.instance.types[i].rate / 2.0;
        let mut end = 0.0;
        for (slot, _) in self.top_half_order(state, i) {
            end += slot.x;
            if theta < end {
                return self.apply(state, slot.j, slot.w);
            }
        }
        Decision::NONE
    }

    pub fn poisson_ocs_step(&self, state: &mut MatchState, i: usize, t: f64, u: f64) -> Decision {
        state.time = t;
        let weight = |s: &Slot| (t * self.loads[s.j]).exp() * s.x;
        let live = |s: &&Slot| !state.matched[s.j] && s.x > 0.0;
        let total: f64 = self.slots[i].iter().filter(live).map(weight).sum();
        if total <= 0.0 {
            return Decision::NONE;
        }
        let target = u * total;
        let mut acc = 0.0;
        let mut pick = None;
        for s in self.slots[i].iter().filter(live) {
            acc += weight(s);
            pick = Some(s);
            if target < acc {
                break;
            }
        }
        let s = pick.expect("positive total implies a candidate");
        self.apply(state, s.j, s.w)
    }

    pub fn suggested_step(&self, state: &mut MatchState, i: usize, t: f64, u: f64) -> Decision {
        state.time = t;
        let theta = u * self.instance.types[i].rate;
        let mut end = 0.0;
        for s in &self.slots[i] {
            end += s.x;
            if theta < end {
                return self.apply(state, s.j, s.w);
            }
        }
        Decision::NONE
    }

    fn greedy_pick(&self, state: &MatchState, i: usize) -> Option<&Slot> {
        let mut best: Option<(&Slot, f64)> = None;
        for s in &self.slots[i] {
            let g = self.marginal(state, s.j, s.w);
            if g > 0.0 && best.is_none_or(|(_, bg)| g > bg) {
                best = Some((s, g));
            }
        }
        best.map(|b| b.0)
    }

    /// Heaviest positive marginal, ties to the smallest index. Ignores `u`.
    pub fn greedy_step(&self, state: &mut MatchState, i: usize, t: f64, _u: f64) -> Decision {
        state.time = t;
        match self.greedy_pick(state, i) {
            Some(s) => self.apply(state, s.j, s.w),
            None => Decision::NONE,
        }
    }

    pub fn step(&self, algo: AlgoChoice, state: &mut MatchState, i: usize, t: f64, u: f64) -> Decision {
        debug_assert!(t >= state.time, "time went backwards: {} < {}", t, state.time);
        match algo {
            AlgoChoice::SuggestedMatching => self.suggested_step(state, i, t, u),
            AlgoChoice::TopHalfSampling => self.top_half_step(state, i, t, u),
            AlgoChoice::PoissonOCS => self.poisson_ocs_step(state, i, t, u),
            AlgoChoice::Greedy => self.greedy_step(state, i, t, u),
        }
    }

    /// Exact law of one step's outcome (`Some(j)` rematches `j`, `None` is a
    /// no-op), computed from slot geometry rather than by replaying the step.
    pub fn decision_distribution(
        &self,
        algo: AlgoChoice,
        state: &MatchState,
        i: usize,
        t: f64,
    ) -> Vec<(Option<usize>, f64)> {
        let rate = self.instance.types[i].rate;
        let mut out: Vec<(Option<usize>, f64)> = Vec::new();
        match algo {
            AlgoChoice::TopHalfSampling => {
                let half = rate / 2.0;
                let mut start = 0.0;
                for (s, gain) in self.top_half_order(state, i) {
                    let lo = start;
                    start += s.x;
                    let overlap = (start.min(half) - lo.min(half)).max(0.0);
                    if gain > 0.0 && overlap > 0.0 {
                        out.push((Some(s.j), overlap / half));
                    }
                }
            }
            AlgoChoice::SuggestedMatching => {
                for s in &self.slots[i] {
                    if s.x > 0.0 && self.marginal(state, s.j, s.w) > 0.0 {
                        out.push((Some(s.j), s.x / rate));
                    }
                }
            }
            AlgoChoice::PoissonOCS => {
                let cands: Vec<(usize, f64)> = self.slots[i]
                    .iter()
                    .filter(|s| !state.matched[s.j] && s.x > 0.0)
                    .map(|s| (s.j, (t * self.loads[s.j]).exp() * s.x))
                    .collect();
                let total: f64 = cands.iter().map(|c| c.1).sum();
                out.extend(cands.into_iter().map(|(j, w)| (Some(j), w / total)));
            }
            AlgoChoice::Greedy => {
                if let Some(s) = self.greedy_pick(state, i) {
                    out.push((Some(s.j), 1.0));
                }
            }
        }
        let used: f64 = out.iter().map(|o| o.1).sum();
        if used < 1.0 {
            out.push((None, 1.0 - used));
        }
        out
    }

    /// Folds `algo` over `arrivals`, drawing one uniform per arrival from `rng`.
    pub fn run_with_rng<R: Rng>(
        &self,
        algo: AlgoChoice,
        arrivals: &ArrivalSequence,
        rng: &mut R,
        state: &mut MatchState,
        mut trace: Option<&mut Vec<TraceRow>>,
    ) {
        for a in arrivals.iter() {
            let u: f64 = rng.random();
            let d = self.step(algo, state, a.i, a.t, u);
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(TraceRow { t: a.t, i: a.i, chosen: d.chosen, gain: d.gain });
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: MatchState,
    pub matched: Vec<bool>,
    pub trace: Vec<TraceRow>,
}

/// Runs `algo` over one arrival sequence with uniforms derived from `seed`.
pub fn run_online(
    instance: &Instance,
    x: &FractionalMatching,
    algo: AlgoChoice,
    arrivals: &ArrivalSequence,
    seed: u64,
) -> Result<RunOutcome> {
    instance.validate()?;
    let ctx = OnlineContext::new(instance, x)?;
    ctx.check_algo(algo)?;
    Ok(run_ctx(&ctx, algo, arrivals, seed))
}

/// Like [`run_online`] but without the applicability check; used to study
/// Top Half Sampling on edge-weighted instances without free disposal,
/// where it carries no guarantee.
pub fn run_online_unchecked(
    instance: &Instance,
    x: &FractionalMatching,
    algo: AlgoChoice,
    arrivals: &ArrivalSequence,
    seed: u64,
) -> Result<RunOutcome> {
    instance.validate()?;
    let ctx = OnlineContext::new(instance, x)?;
    Ok(run_ctx(&ctx, algo, arrivals, seed))
}

fn run_ctx(ctx: &OnlineContext<'_>, algo: AlgoChoice, arrivals: &ArrivalSequence, seed: u64) -> RunOutcome {
    let mut rng = derived_rng(seed, "online", 0);
    let mut state = MatchState::new(ctx.instance.offline_count);
    let mut trace = Vec::with_capacity(arrivals.len());
    ctx.run_with_rng(algo, arrivals, &mut rng, &mut state, Some(&mut trace));
    let matched = state.matched.clone();
    RunOutcome { state, matched, trace }
}
