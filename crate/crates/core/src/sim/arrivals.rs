use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::Instance;
use crate::seeds::derived_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub t: f64,
    /// Online type.
    pub i: usize,
}

/// One realization of the arrival process, strictly increasing in time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSequence {
    arrivals: Vec<Arrival>,
}

impl ArrivalSequence {
    /// Sorts by time (ties by type) and nudges equal timestamps up to the
    /// next representable double.
    pub fn from_unsorted(mut arrivals: Vec<Arrival>) -> Self {
        sort_and_separate(&mut arrivals);
        Self { arrivals }
    }

    /// Wraps arrivals already in time order; equal timestamps are separated.
    pub fn from_sorted(mut arrivals: Vec<Arrival>) -> Self {
        separate(&mut arrivals);
        Self { arrivals }
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Arrival> {
        self.arrivals.iter()
    }

    pub fn as_slice(&self) -> &[Arrival] {
        &self.arrivals
    }

    /// Gives the buffer back for reuse.
    pub fn into_inner(self) -> Vec<Arrival> {
        self.arrivals
    }
}

fn sort_and_separate(a: &mut [Arrival]) {
    a.sort_by(|p, q| p.t.total_cmp(&q.t).then(p.i.cmp(&q.i)));
    separate(a);
}

fn separate(a: &mut [Arrival]) {
    for k in 1..a.len() {
        if a[k].t <= a[k - 1].t {
            a[k].t = a[k - 1].t.next_up();
        }
    }
}

/// Per-type Poisson samplers for an instance.
#[derive(Clone, Debug)]
pub struct PoissonSampler {
    counts: Vec<Poisson<f64>>,
}

impl PoissonSampler {
    pub fn new(instance: &Instance) -> Result<Self> {
        let counts = instance
            .types
            .iter()
            .map(|t| Poisson::new(t.rate).map_err(|e| invalid(format!("rate {}: {e}", t.rate))))
            .collect::<Result<_>>()?;
        Ok(Self { counts })
    }

    /// Refills `buf` with one realization: `Poisson(λ_i)` arrivals of each
    /// type at i.i.d. uniform times, merged in time order.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, buf: &mut Vec<Arrival>) {
        buf.clear();
        for (i, d) in self.counts.iter().enumerate() {
            let n = d.sample(rng) as usize;
            for _ in 0..n {
                buf.push(Arrival { t: rng.random::<f64>(), i });
            }
        }
        sort_and_separate(buf);
    }
}

/// Fixed number `Λ` of arrivals at times `k/Λ` with types drawn in
/// proportion to their rates.
#[derive(Clone, Debug)]
pub struct FixedSampler {
    lambda: usize,
    types: WeightedIndex<f64>,
}

impl FixedSampler {
    pub fn new(instance: &Instance, lambda: usize) -> Result<Self> {
        if lambda == 0 {
            return Err(invalid("fixed arrival model needs Lambda >= 1"));
        }
        let rates: Vec<f64> = instance.types.iter().map(|t| t.rate).collect();
        let types = WeightedIndex::new(&rates).map_err(|e| invalid(format!("type weights: {e}")))?;
        Ok(Self { lambda, types })
    }

    pub fn sample_into<R: Rng>(&self, rng: &mut R, buf: &mut Vec<Arrival>) {
        buf.clear();
        let n = self.lambda as f64;
        for k in 1..=self.lambda {
            buf.push(Arrival { t: k as f64 / n, i: self.types.sample(rng) });
        }
    }
}

pub fn sample_poisson_arrivals(instance: &Instance, seed: u64) -> ArrivalSequence {
    let sampler = PoissonSampler::new(instance).expect("validated instances have positive finite rates");
    let mut buf = Vec::new();
    sampler.sample_into(&mut derived_rng(seed, "arrivals", 0), &mut buf);
    ArrivalSequence { arrivals: buf }
}

pub fn sample_fixed_arrivals(instance: &Instance, lambda: usize, seed: u64) -> Result<ArrivalSequence> {
    let sampler = FixedSampler::new(instance, lambda)?;
    let mut buf = Vec::new();
    sampler.sample_into(&mut derived_rng(seed, "arrivals", 0), &mut buf);
    Ok(ArrivalSequence { arrivals: buf })
}
