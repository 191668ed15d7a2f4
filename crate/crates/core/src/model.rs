//! Instances of online stochastic matching and their generators.
//!
//! An [`Instance`] is a bipartite *type graph*: every online type `i` arrives
//! as a Poisson process of rate `λ_i` on `[0, 1]` and is adjacent to a sparse
//! list of offline vertices `0..offline_count` with positive edge weights.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seeds::rng_from_seed;

/// Approximate constant `c*_{2.5}` used to size the hardness instance.
pub const HARDNESS_C_STAR: f64 = 0.81;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightClass {
    #[serde(rename = "unweighted")]
    Unweighted,
    #[serde(rename = "vertex")]
    VertexWeighted,
    #[serde(rename = "edge")]
    EdgeWeighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub j: usize,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineType {
    pub rate: f64,
    pub edges: Vec<Edge>,
}

/// Bipartite type graph. Immutable once built; share freely across threads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub offline_count: usize,
    pub weight_class: WeightClass,
    pub free_disposal: bool,
    pub types: Vec<OnlineType>,
}

/// First violated instance invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoOfflineVertices,
    NonPositiveRate { i: usize },
    NonPositiveWeight { i: usize, j: usize },
    NeighborOutOfRange { i: usize, j: usize },
    DuplicateNeighbor { i: usize, j: usize },
    UnweightedRequiresUnitWeights { i: usize, j: usize },
    VertexWeightedRequiresCommonWeight { j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoOfflineVertices => write!(f, "offline_count must be positive"),
            Violation::NonPositiveRate { i } => write!(f, "rate must be positive (type {i})"),
            Violation::NonPositiveWeight { i, j } => {
                write!(f, "weight must be positive (edge {i}-{j})")
            }
            Violation::NeighborOutOfRange { i, j } => {
                write!(f, "neighbor index out of range (type {i}, offline {j})")
            }
            Violation::DuplicateNeighbor { i, j } => {
                write!(f, "duplicate neighbor (type {i}, offline {j})")
            }
            Violation::UnweightedRequiresUnitWeights { i, j } => {
                write!(f, "unweighted requires w_ij = 1 (edge {i}-{j})")
            }
            Violation::VertexWeightedRequiresCommonWeight { j } => {
                write!(f, "vertex-weighted requires w_ij = w_j (offline {j})")
            }
        }
    }
}

impl std::error::Error for Violation {}

/// Returns the first violated invariant of `instance`, or `Ok(())`.
pub fn validate(instance: &Instance) -> std::result::Result<(), Violation> {
    instance.validate()
}

impl Instance {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if self.offline_count == 0 {
            return Err(Violation::NoOfflineVertices);
        }
        let mut vertex_weight: Vec<Option<f64>> = vec![None; self.offline_count];
        let mut seen = vec![usize::MAX; self.offline_count];
        for (i, ty) in self.types.iter().enumerate() {
            if !(ty.rate > 0.0 && ty.rate.is_finite()) {
                return Err(Violation::NonPositiveRate { i });
            }
            for e in &ty.edges {
                let j = e.j;
                if j >= self.offline_count {
                    return Err(Violation::NeighborOutOfRange { i, j });
                }
                if seen[j] == i {
                    return Err(Violation::DuplicateNeighbor { i, j });
                }
                seen[j] = i;
                if !(e.w > 0.0 && e.w.is_finite()) {
                    return Err(Violation::NonPositiveWeight { i, j });
                }
                match self.weight_class {
                    WeightClass::Unweighted if e.w != 1.0 => {
                        return Err(Violation::UnweightedRequiresUnitWeights { i, j });
                    }
                    WeightClass::VertexWeighted => match vertex_weight[j] {
                        Some(w) if (w - e.w).abs() > 1e-12 * w.abs().max(1.0) => {
                            return Err(Violation::VertexWeightedRequiresCommonWeight { j });
                        }
                        Some(_) => {}
                        None => vertex_weight[j] = Some(e.w),
                    },
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }

    pub fn total_rate(&self) -> f64 {
        self.types.iter().map(|t| t.rate).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.types.iter().map(|t| t.edges.len()).sum()
    }

    /// Whether only the heaviest matched edge counts per offline vertex.
    /// Free disposal is meaningful only for edge-weighted instances.
    pub fn disposal_applies(&self) -> bool {
        self.weight_class == WeightClass::EdgeWeighted && self.free_disposal
    }

    /// Flat edge list `(i, k, j)`, where `k` indexes `types[i].edges`.
    pub fn edge_refs(&self) -> Vec<(usize, usize, usize)> {
        self.types
            .iter()
            .enumerate()
            .flat_map(|(i, ty)| ty.edges.iter().enumerate().map(move |(k, e)| (i, k, e.j)))
            .collect()
    }

    /// Online types adjacent to each offline vertex (`I_j`).
    pub fn offline_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.offline_count];
        for (i, ty) in self.types.iter().enumerate() {
            for e in &ty.edges {
                out[e.j].push(i);
            }
        }
        out
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.types[i].edges.iter().find(|e| e.j == j).map(|e| e.w)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }
}

/// Fractional matching `x_ij`, stored aligned with `types[i].edges`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalMatching {
    pub values: Vec<Vec<f64>>,
}

impl FractionalMatching {
    pub fn zeros(instance: &Instance) -> Self {
        Self { values: instance.types.iter().map(|t| vec![0.0; t.edges.len()]).collect() }
    }

    /// Builds `x` from a function of `(i, j)`.
    pub fn from_fn(instance: &Instance, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            values: instance
                .types
                .iter()
                .enumerate()
                .map(|(i, t)| t.edges.iter().map(|e| f(i, e.j)).collect())
                .collect(),
        }
    }

    /// `x_ij`, zero for non-edges.
    pub fn get(&self, instance: &Instance, i: usize, j: usize) -> f64 {
        instance.types[i].edges.iter().position(|e| e.j == j).map_or(0.0, |k| self.values[i][k])
    }

    /// `ρ_ij = x_ij / λ_i`, zero for non-edges.
    pub fn rho(&self, instance: &Instance, i: usize, j: usize) -> f64 {
        self.get(instance, i, j) / instance.types[i].rate
    }

    /// Offline loads `x_j = Σ_i x_ij`.
    pub fn loads(&self, instance: &Instance) -> Vec<f64> {
        let mut out = vec![0.0; instance.offline_count];
        for (ty, row) in instance.types.iter().zip(&self.values) {
            for (e, v) in ty.edges.iter().zip(row) {
                out[e.j] += v;
            }
        }
        out
    }

    /// Online usage `Σ_j x_ij` per type.
    pub fn type_totals(&self) -> Vec<f64> {
        self.values.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn check_shape(&self, instance: &Instance) -> Result<()> {
        if self.values.len() != instance.types.len() {
            return Err(Error::MatchingShape(format!("{} rows for {} types", self.values.len(), instance.types.len())));
        }
        for (i, (row, ty)) in self.values.iter().zip(&instance.types).enumerate() {
            if row.len() != ty.edges.len() {
                return Err(Error::MatchingShape(format!(
                    "type {i}: {} values for {} edges",
                    row.len(),
                    ty.edges.len()
                )));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::MatchingShape(format!("type {i}: negative or non-finite value")));
            }
        }
        Ok(())
    }

    /// Checks the fractional-matching invariants: `Σ_j x_ij ≤ λ_i` and
    /// `x_j ≤ 1`, both up to `tol`.
    pub fn check_feasible(&self, instance: &Instance, tol: f64) -> Result<()> {
        self.check_shape(instance)?;
        for (i, (tot, ty)) in self.type_totals().iter().zip(&instance.types).enumerate() {
            if *tot > ty.rate + tol {
                return Err(Error::MatchingShape(format!("type {i}: Σ_j x_ij = {tot} exceeds λ_i = {}", ty.rate)));
            }
        }
        for (j, load) in self.loads(instance).iter().enumerate() {
            if *load > 1.0 + tol {
                return Err(Error::MatchingShape(format!("offline {j}: x_j = {load} exceeds 1")));
            }
        }
        Ok(())
    }
}

/// Parameters of [`gen_random`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_types: usize,
    pub n_offline: usize,
    pub edge_prob: f64,
    pub rate_range: (f64, f64),
    pub weight_range: (f64, f64),
    pub weight_class: WeightClass,
    pub free_disposal: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n_types: 4,
            n_offline: 3,
            edge_prob: 0.5,
            rate_range: (0.2, 1.5),
            weight_range: (1.0, 5.0),
            weight_class: WeightClass::Unweighted,
            free_disposal: false,
        }
    }
}

const MAX_NEIGHBOR_RETRIES: usize = 10_000;

/// Random instance, a pure function of `(params, seed)`. Every type gets at
/// least one neighbor (degenerate types are resampled).
pub fn gen_random(params: &GenParams, seed: u64) -> Result<Instance> {
    let (rlo, rhi) = params.rate_range;
    let (wlo, whi) = params.weight_range;
    if params.n_types == 0 || params.n_offline == 0 {
        return Err(invalid("n_types and n_offline must be positive"));
    }
    if !(params.edge_prob > 0.0 && params.edge_prob <= 1.0) {
        return Err(invalid("edge_prob must lie in (0, 1]"));
    }
    if !(rlo > 0.0 && rhi >= rlo && rhi.is_finite()) {
        return Err(invalid("rate_range must be positive and ordered"));
    }
    if !(wlo > 0.0 && whi >= wlo && whi.is_finite()) {
        return Err(invalid("weight_range must be positive and ordered"));
    }
    // P(no neighbor) = (1-p)^n; refuse settings where resampling is hopeless.
    let p_empty = (1.0 - params.edge_prob).powi(params.n_offline as i32);
    if p_empty > 0.999 {
        return Err(invalid(format!(
            "edge_prob {} leaves a type without neighbors with probability {p_empty:.4}",
            params.edge_prob
        )));
    }

    let mut rng = rng_from_seed(seed);
    let sample = |rng: &mut crate::seeds::SimRng, lo: f64, hi: f64| {
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    };
    let vertex_w: Vec<f64> = (0..params.n_offline).map(|_| sample(&mut rng, wlo, whi)).collect();

    let mut types = Vec::with_capacity(params.n_types);
    for _ in 0..params.n_types {
        let rate = sample(&mut rng, rlo, rhi);
        let mut neighbors = Vec::new();
        for attempt in 0.. {
            if attempt == MAX_NEIGHBOR_RETRIES {
                return Err(invalid("could not draw a type with at least one neighbor"));
            }
            neighbors = (0..params.n_offline).filter(|_| rng.random_bool(params.edge_prob)).collect();
            if !neighbors.is_empty() {
                break;
            }
        }
        let edges = neighbors
            .into_iter()
            .map(|j| {
                let w = match params.weight_class {
                    WeightClass::Unweighted => 1.0,
                    WeightClass::VertexWeighted => vertex_w[j],
                    WeightClass::EdgeWeighted => sample(&mut rng, wlo, whi),
                };
                Edge { j, w }
            })
            .collect();
        types.push(OnlineType { rate, edges });
    }
    let inst = Instance {
        offline_count: params.n_offline,
        weight_class: params.weight_class,
        free_disposal: params.free_disposal,
        types,
    };
    inst.validate()?;
    Ok(inst)
}

/// Largest `n` for which the hardness instance is built explicitly.
pub const HARDNESS_MAX_EXPLICIT_N: usize = 50;

/// Edge-weighted hardness instance without free disposal, with the default
/// `c* = 0.81`.
pub fn gen_hardness_edge_weighted(n: usize, x: f64, eps: f64) -> Result<Instance> {
    gen_hardness_edge_weighted_with(n, x, eps, HARDNESS_C_STAR)
}

/// Type classes, in order: `n` singletons (weight `x/eps`, rate `eps`), all
/// pairs (rate `m / C(n,2)`), all triples (rate `m / C(n,3)`), then one type
/// adjacent to everything (rate `n - 2m - n·eps`); `m = c*·n/2`.
pub fn gen_hardness_edge_weighted_with(n: usize, x: f64, eps: f64, c_star: f64) -> Result<Instance> {
    if n < 3 {
        return Err(invalid("hardness instance needs n >= 3 (no triples otherwise)"));
    }
    if n > HARDNESS_MAX_EXPLICIT_N {
        return Err(invalid(format!("n = {n} is too large to enumerate explicitly (max {HARDNESS_MAX_EXPLICIT_N})")));
    }
    if !(x > 0.0 && eps > 0.0 && c_star > 0.0) {
        return Err(invalid("x, eps and c* must be positive"));
    }
    let nf = n as f64;
    let m = 0.5 * c_star * nf;
    let full_rate = nf - 2.0 * m - nf * eps;
    if full_rate <= 0.0 {
        return Err(invalid(format!("n - 2m - n·eps = {full_rate} must be positive")));
    }
    let pairs = nf * (nf - 1.0) / 2.0;
    let triples = nf * (nf - 1.0) * (nf - 2.0) / 6.0;
    let unit = |j| Edge { j, w: 1.0 };

    let mut types = Vec::new();
    for j in 0..n {
        types.push(OnlineType { rate: eps, edges: vec![Edge { j, w: x / eps }] });
    }
    for a in 0..n {
        for b in a + 1..n {
            types.push(OnlineType { rate: m / pairs, edges: vec![unit(a), unit(b)] });
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                types.push(OnlineType { rate: m / triples, edges: vec![unit(a), unit(b), unit(c)] });
            }
        }
    }
    types.push(OnlineType { rate: full_rate, edges: (0..n).map(unit).collect() });

    let inst = Instance { offline_count: n, weight_class: WeightClass::EdgeWeighted, free_disposal: false, types };
    inst.validate()?;
    Ok(inst)
}

/// Offline vertex `t` of the Jaillet-Lu instance.
pub const JL_TOP: usize = 0;
/// Offline vertex `b` of the Jaillet-Lu instance.
pub const JL_BOTTOM: usize = 1;

/// The unweighted instance that makes the Jaillet-Lu LP tight: types
/// `T, M, B` (in that order) and offline vertices `t, b`.
pub fn gen_jaillet_lu() -> Instance {
    let ln2 = std::f64::consts::LN_2;
    let unit = |j| Edge { j, w: 1.0 };
    Instance {
        offline_count: 2,
        weight_class: WeightClass::Unweighted,
        free_disposal: false,
        types: vec![
            OnlineType { rate: 1.0 - ln2, edges: vec![unit(JL_TOP)] },
            OnlineType { rate: 2.0 * ln2, edges: vec![unit(JL_TOP), unit(JL_BOTTOM)] },
            OnlineType { rate: 1.0 - ln2, edges: vec![unit(JL_BOTTOM)] },
        ],
    }
}
