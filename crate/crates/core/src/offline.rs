//! Offline optimum on a realized graph.
//!
//! One left vertex per arrival, carrying its type's edges. The optimum is a
//! maximum-weight bipartite matching, found with the Hungarian method on the
//! dense matrix (missing edges weigh zero).

use crate::model::Instance;
use crate::sim::ArrivalSequence;

#[derive(Clone, Debug, PartialEq)]
pub struct RealizedGraph {
    pub arrivals: ArrivalSequence,
    pub right: usize,
    /// `(arrival index, offline index, weight)`
    pub edges: Vec<(usize, usize, f64)>,
}

impl RealizedGraph {
    pub fn left(&self) -> usize {
        self.arrivals.len()
    }

    /// Edges of one left vertex.
    pub fn edges_of(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.edges.iter().filter(move |e| e.0 == a).map(|e| (e.1, e.2))
    }
}

pub fn realized_graph(instance: &Instance, arrivals: &ArrivalSequence) -> RealizedGraph {
    let edges = arrivals
        .iter()
        .enumerate()
        .flat_map(|(a, ev)| instance.types[ev.i].edges.iter().map(move |e| (a, e.j, e.w)))
        .collect();
    RealizedGraph { arrivals: arrivals.clone(), right: instance.offline_count, edges }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineMatching {
    pub value: f64,
    /// `(left, right)` pairs with positive weight.
    pub pairs: Vec<(usize, usize)>,
}

pub fn max_weight_matching(graph: &RealizedGraph) -> OfflineMatching {
    let (rows, cols) = (graph.left(), graph.right);
    let mut w = vec![0.0; rows * cols];
    for &(a, j, wt) in &graph.edges {
        w[a * cols + j] = wt;
    }
    let mut ws = Hungarian::default();
    let value = ws.solve(&w, rows, cols);
    let pairs = ws.pairs().into_iter().filter(|&(r, c)| w[r * cols + c] > 0.0).collect();
    OfflineMatching { value, pairs }
}

/// Reusable buffers for the Hungarian method, so repeated solves in a Monte
/// Carlo loop do not allocate.
#[derive(Clone, Debug, Default)]
pub struct Hungarian {
    u: Vec<f64>,
    v: Vec<f64>,
    p: Vec<usize>,
    way: Vec<usize>,
    minv: Vec<f64>,
    used: Vec<bool>,
    cost: Vec<f64>,
    transposed: bool,
    n: usize,
    m: usize,
}

impl Hungarian {
    /// Maximum-weight matching value for the row-major `rows × cols` matrix
    /// of nonnegative weights.
    pub fn solve(&mut self, w: &[f64], rows: usize, cols: usize) -> f64 {
        if rows == 0 || cols == 0 {
            self.n = 0;
            self.m = 0;
            return 0.0;
        }
        // Rows must not outnumber columns.
        self.transposed = rows > cols;
        let (n, m) = if self.transposed { (cols, rows) } else { (rows, cols) };
        self.n = n;
        self.m = m;
        self.cost.clear();
        self.cost.resize((n + 1) * (m + 1), 0.0);
        for r in 0..rows {
            for c in 0..cols {
                let (i, j) = if self.transposed { (c, r) } else { (r, c) };
                self.cost[(i + 1) * (m + 1) + j + 1] = -w[r * cols + c];
            }
        }
        reset(&mut self.u, n + 1, 0.0);
        reset(&mut self.v, m + 1, 0.0);
        reset(&mut self.p, m + 1, 0);
        reset(&mut self.way, m + 1, 0);
        for i in 1..=n {
            self.p[0] = i;
            let mut j0 = 0;
            reset(&mut self.minv, m + 1, f64::INFINITY);
            reset(&mut self.used, m + 1, false);
            loop {
                self.used[j0] = true;
                let i0 = self.p[j0];
                let mut delta = f64::INFINITY;
                let mut j1 = 0;
                for j in 1..=m {
                    if !self.used[j] {
                        let cur = self.cost[i0 * (m + 1) + j] - self.u[i0] - self.v[j];
                        if cur < self.minv[j] {
                            self.minv[j] = cur;
                            self.way[j] = j0;
                        }
                        if self.minv[j] < delta {
                            delta = self.minv[j];
                            j1 = j;
                        }
                    }
                }
                for j in 0..=m {
                    if self.used[j] {
                        self.u[self.p[j]] += delta;
                        self.v[j] -= delta;
                    } else {
                        self.minv[j] -= delta;
                    }
                }
                j0 = j1;
                if self.p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = self.way[j0];
                self.p[j0] = self.p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        (1..=m).filter(|&j| self.p[j] != 0).map(|j| -self.cost[self.p[j] * (m + 1) + j]).sum()
    }

    /// Assignment of the last solve as `(row, col)` in the caller's
    /// orientation, including zero-weight pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (1..=self.m)
            .filter(|&j| self.p.get(j).is_some_and(|&i| i != 0))
            .map(|j| {
                let (i, c) = (self.p[j] - 1, j - 1);
                if self.transposed {
                    (c, i)
                } else {
                    (i, c)
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

fn reset<T: Copy>(v: &mut Vec<T>, len: usize, val: T) {
    v.clear();
    v.resize(len, val);
}
