//! Arrival sampling, Monte Carlo ratio estimation and an exact expectation
//! oracle for tiny instances.

mod arrivals;
mod exact;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{FractionalMatching, Instance};
use crate::offline::Hungarian;
use crate::online::{AlgoChoice, MatchState, OnlineContext};
use crate::seeds::{derived_rng, SimRng};

pub use arrivals::{
    sample_fixed_arrivals, sample_poisson_arrivals, Arrival, ArrivalSequence, FixedSampler, PoissonSampler,
};
pub use exact::{exact_expected_value, ExactValue};

/// Trials per parallel work unit; fixed so that sums never depend on the
/// number of threads.
const CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArrivalModel {
    Poisson,
    Fixed { lambda: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub algo: AlgoChoice,
    pub model: ArrivalModel,
    pub seed: u64,
    pub trials: u64,
    pub alg_mean: f64,
    pub opt_mean: f64,
    pub ratio: f64,
    pub alg_stderr: f64,
    pub opt_stderr: f64,
    /// Per offline vertex: (matched frequency, standard error).
    pub per_vertex_match_prob: Vec<(f64, f64)>,
}

enum Sampler {
    Poisson(PoissonSampler),
    Fixed(FixedSampler),
}

impl Sampler {
    fn new(instance: &Instance, model: ArrivalModel) -> Result<Self> {
        Ok(match model {
            ArrivalModel::Poisson => Sampler::Poisson(PoissonSampler::new(instance)?),
            ArrivalModel::Fixed { lambda } => Sampler::Fixed(FixedSampler::new(instance, lambda)?),
        })
    }

    fn sample_into(&self, rng: &mut SimRng, buf: &mut Vec<Arrival>) {
        match self {
            Sampler::Poisson(s) => s.sample_into(rng, buf),
            Sampler::Fixed(s) => s.sample_into(rng, buf),
        }
    }
}

#[derive(Clone, Debug)]
struct Sums {
    alg: f64,
    alg2: f64,
    opt: f64,
    opt2: f64,
    matched: Vec<u64>,
}

impl Sums {
    fn new(n: usize) -> Self {
        Self { alg: 0.0, alg2: 0.0, opt: 0.0, opt2: 0.0, matched: vec![0; n] }
    }

    fn merge(&mut self, o: &Sums) {
        self.alg += o.alg;
        self.alg2 += o.alg2;
        self.opt += o.opt;
        self.opt2 += o.opt2;
        for (a, b) in self.matched.iter_mut().zip(&o.matched) {
            *a += b;
        }
    }
}

fn mean_stderr(sum: f64, sum2: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` independent trials. Trial `k` draws its arrivals and then the
/// algorithm's uniforms from a stream derived from `(seed, k)`.
fn run_trials(
    instance: &Instance,
    x: &FractionalMatching,
    algo: AlgoChoice,
    trials: u64,
    seed: u64,
    model: ArrivalModel,
    mut record: Option<&mut Vec<(f64, f64)>>,
) -> Result<Sums> {
    instance.validate()?;
    let ctx = OnlineContext::new(instance, x)?;
    ctx.check_algo(algo)?;
    let sampler = Sampler::new(instance, model)?;
    let nj = instance.offline_count;
    let chunks = trials.div_ceil(CHUNK);
    let want_record = record.is_some();

    let parts: Vec<(Sums, Vec<(f64, f64)>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sums = Sums::new(nj);
            let mut rows = Vec::new();
            let mut buf = Vec::new();
            let mut state = MatchState::new(nj);
            let mut hung = Hungarian::default();
            let mut w = Vec::new();
            for k in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = derived_rng(seed, "trial", k);
                sampler.sample_into(&mut rng, &mut buf);
                let seq = ArrivalSequence::from_sorted(std::mem::take(&mut buf));
                state.reset();
                ctx.run_with_rng(algo, &seq, &mut rng, &mut state, None);
                let opt = opt_value(instance, &seq, &mut hung, &mut w);
                buf = seq.into_inner();
                let alg = state.objective;
                sums.alg += alg;
                sums.alg2 += alg * alg;
                sums.opt += opt;
                sums.opt2 += opt * opt;
                for (m, &f) in sums.matched.iter_mut().zip(&state.matched) {
                    *m += u64::from(f);
                }
                if want_record {
                    rows.push((alg, opt));
                }
            }
            (sums, rows)
        })
        .collect();

    let mut total = Sums::new(nj);
    for (s, rows) in &parts {
        total.merge(s);
        if let Some(r) = record.as_deref_mut() {
            r.extend_from_slice(rows);
        }
    }
    Ok(total)
}

/// Offline optimum of the realized graph, reusing scratch buffers.
pub(crate) fn opt_value(instance: &Instance, seq: &ArrivalSequence, hung: &mut Hungarian, w: &mut Vec<f64>) -> f64 {
    let cols = instance.offline_count;
    w.clear();
    w.resize(seq.len() * cols, 0.0);
    for (a, ev) in seq.iter().enumerate() {
        for e in &instance.types[ev.i].edges {
            w[a * cols + e.j] = e.w;
        }
    }
    hung.solve(w, seq.len(), cols)
}

/// Estimates `E[ALG]`, `E[OPT]` and their ratio. Deterministic in
/// `(instance, x, algo, trials, seed, model)` regardless of thread count.
pub fn monte_carlo(
    instance: &Instance,
    x: &FractionalMatching,
    algo: AlgoChoice,
    trials: u64,
    seed: u64,
    model: ArrivalModel,
) -> Result<McReport> {
    monte_carlo_impl(instance, x, algo, trials, seed, model, None)
}

/// [`monte_carlo`] that also returns per-trial `(alg, opt)` values.
pub fn monte_carlo_with_trials(
    instance: &Instance,
    x: &FractionalMatching,
    algo: AlgoChoice,
    trials: u64,
    seed: u64,
    model: ArrivalModel,
) -> Result<(McReport, Vec<(f64, f64)>)> {
    let mut rows = Vec::with_capacity(trials.min(1 << 24) as usize);
    let rep = monte_carlo_impl(instance, x, algo, trials, seed, model, Some(&mut rows))?;
    Ok((rep, rows))
}

fn monte_carlo_impl(
    instance: &Instance,
    x: &FractionalMatching,
    algo: AlgoChoice,
    trials: u64,
    seed: u64,
    model: ArrivalModel,
    record: Option<&mut Vec<(f64, f64)>>,
) -> Result<McReport> {
    if trials < 2 {
        return Err(invalid("monte carlo needs at least 2 trials"));
    }
    let s = run_trials(instance, x, algo, trials, seed, model, record)?;
    let n = trials as f64;
    let (alg_mean, alg_stderr) = mean_stderr(s.alg, s.alg2, n);
    let (opt_mean, opt_stderr) = mean_stderr(s.opt, s.opt2, n);
    let per_vertex_match_prob = s
        .matched
        .iter()
        .map(|&c| {
            let c = c as f64;
            mean_stderr(c, c, n)
        })
        .collect();
    Ok(McReport {
        algo,
        model,
        seed,
        trials,
        alg_mean,
        opt_mean,
        ratio: if opt_mean > 0.0 { alg_mean / opt_mean } else { 1.0 },
        alg_stderr,
        opt_stderr,
        per_vertex_match_prob,
    })
}

/// Writes per-trial values as `trial,alg_value,opt_value`.
pub fn write_trials_csv(mut out: impl Write, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "trial,alg_value,opt_value")?;
    for (k, (a, o)) in rows.iter().enumerate() {
        writeln!(out, "{k},{a},{o}")?;
    }
    Ok(())
}

/// Monte Carlo estimate of `Pr[every j ∈ T unmatched at time t]` under
/// Poisson OCS with Poisson arrivals, with its standard error.
pub fn unmatched_probability_estimate(
    instance: &Instance,
    x: &FractionalMatching,
    t_set: &[usize],
    t: f64,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if t_set.is_empty() || t_set.iter().any(|&j| j >= instance.offline_count) {
        return Err(invalid("T must be a nonempty set of offline vertices"));
    }
    if trials < 2 {
        return Err(invalid("need at least 2 trials"));
    }
    instance.validate()?;
    let ctx = OnlineContext::new(instance, x)?;
    ctx.check_algo(AlgoChoice::PoissonOCS)?;
    let sampler = PoissonSampler::new(instance)?;
    let nj = instance.offline_count;
    let chunks = trials.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = Vec::new();
            let mut state = MatchState::new(nj);
            let mut hits = 0u64;
            for k in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = derived_rng(seed, "unmatched", k);
                sampler.sample_into(&mut rng, &mut buf);
                buf.retain(|a| a.t <= t);
                let seq = ArrivalSequence::from_sorted(std::mem::take(&mut buf));
                state.reset();
                ctx.run_with_rng(AlgoChoice::PoissonOCS, &seq, &mut rng, &mut state, None);
                buf = seq.into_inner();
                hits += u64::from(t_set.iter().all(|&j| !state.matched[j]));
            }
            hits
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let h = hits as f64;
    Ok(mean_stderr(h, h, trials as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_lp;
    use crate::model::{gen_jaillet_lu, gen_random, Edge, GenParams, OnlineType, WeightClass};

    #[test]
    fn reproducible_with_two_trials() {
        let inst = gen_jaillet_lu();
        let x = solve_lp(&inst, 1, 1e-9).unwrap().matching;
        let a = monte_carlo(&inst, &x, AlgoChoice::PoissonOCS, 2, 4, ArrivalModel::Poisson).unwrap();
        let b = monte_carlo(&inst, &x, AlgoChoice::PoissonOCS, 2, 4, ArrivalModel::Poisson).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo(&inst, &x, AlgoChoice::PoissonOCS, 1, 4, ArrivalModel::Poisson).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let inst = gen_random(&GenParams::default(), 2).unwrap();
        let x = solve_lp(&inst, 1, 1e-9).unwrap().matching;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                monte_carlo(&inst, &x, AlgoChoice::TopHalfSampling, 20_000, 1, ArrivalModel::Poisson).unwrap()
            })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn suggested_matching_frequency_matches_thinning() {
        let inst = gen_random(&GenParams { n_types: 4, n_offline: 3, ..GenParams::default() }, 5).unwrap();
        let x = solve_lp(&inst, 1, 1e-9).unwrap().matching;
        let r = monte_carlo(&inst, &x, AlgoChoice::SuggestedMatching, 200_000, 8, ArrivalModel::Poisson).unwrap();
        for (j, (p, se)) in r.per_vertex_match_prob.iter().enumerate() {
            let want = 1.0 - (-x.loads(&inst)[j]).exp();
            assert!((p - want).abs() <= 3.0 * se.max(1e-12), "j={j} p={p} want={want} se={se}");
        }
    }

    #[test]
    fn unmatched_probability_basics() {
        let inst = Instance {
            offline_count: 1,
            weight_class: WeightClass::Unweighted,
            free_disposal: false,
            types: vec![OnlineType { rate: 1.0, edges: vec![Edge { j: 0, w: 1.0 }] }],
        };
        let x = FractionalMatching { values: vec![vec![1.0 - (-1.0f64).exp()]] };
        assert_eq!(unmatched_probability_estimate(&inst, &x, &[0], 0.0, 1000, 1).unwrap(), (1.0, 0.0));
        // OCS matches on the first arrival, so unmatched means no arrival by t.
        let (p, se) = unmatched_probability_estimate(&inst, &x, &[0], 0.5, 100_000, 1).unwrap();
        assert!((p - (-0.5f64).exp()).abs() <= 3.0 * se);
        assert!(unmatched_probability_estimate(&inst, &x, &[], 0.5, 10, 1).is_err());
    }

    #[test]
    fn trials_csv_header() {
        let mut buf = Vec::new();
        write_trials_csv(&mut buf, &[(1.0, 2.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "trial,alg_value,opt_value\n0,1,2\n");
    }
}
