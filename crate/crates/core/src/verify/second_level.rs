//! Discretized second-level recurrence: the pairwise bounds `d̂_{x1,x2}`,
//! their envelope `q̂_x` and the unmatched-probability bound `ŝ_x`.

use rayon::prelude::*;
use serde::Serialize;

use super::{GridConfig, VerifierReport};
use crate::error::{invalid, Error, Result};
use crate::lp::jensen::{case_split_nodes, lambda_star_unordered};

const LANES: usize = 8;

/// Quadrature nodes of one `(x1, x2)` pair, split into `y` and `w = z − y`.
struct PairKernel {
    x1: f64,
    x2: f64,
    y: Vec<f64>,
    w: Vec<f64>,
    c: Vec<f64>,
    sum_y: f64,
    sum_w: f64,
}

impl PairKernel {
    fn new(x1: f64, x2: f64, grid: &GridConfig) -> Result<Self> {
        let (l1, l2) = lambda_star_unordered(x1, x2)?;
        let nodes = case_split_nodes(l1.min(grid.lambda_cap), l2.min(grid.lambda_cap), grid.dlambda);
        let y: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let w: Vec<f64> = nodes.iter().map(|n| n.1 - n.0).collect();
        let c: Vec<f64> = nodes.iter().map(|n| n.2).collect();
        let sum_y = c.iter().zip(&y).map(|(c, y)| c * y).sum();
        let sum_w = c.iter().zip(&w).map(|(c, w)| c * w).sum();
        Ok(Self { x1, x2, y, w, c, sum_y, sum_w })
    }

    /// `d/dt log d̂` at `(D, t)`: minus the case-split integral of
    /// `f̂(y, z)` with `A = e^{t(2x1+x2)}D`, `B = e^{t(x1+2x2)}D`.
    fn log_rate(&self, d: f64, t: f64) -> f64 {
        let a = (t * (2.0 * self.x1 + self.x2)).exp() * d;
        let b = (t * (self.x1 + 2.0 * self.x2)).exp() * d;
        let (am, bm) = ((a - 1.0).max(0.0), (b - 1.0).max(0.0));
        if am == 0.0 && bm == 0.0 {
            return -(a * self.sum_y + b * self.sum_w);
        }
        let mut acc = [0.0; LANES];
        let (yc, wc, cc) = (self.y.chunks_exact(LANES), self.w.chunks_exact(LANES), self.c.chunks_exact(LANES));
        let tail: f64 = yc
            .remainder()
            .iter()
            .zip(wc.remainder())
            .zip(cc.remainder())
            .map(|((y, w), c)| c * (a * y + b * w) / (am * y + bm * w + 1.0))
            .sum();
        for ((y, w), c) in yc.zip(wc).zip(cc) {
            for l in 0..LANES {
                acc[l] += c[l] * (a * y[l] + b * w[l]) / (am * y[l] + bm * w[l] + 1.0);
            }
        }
        -(acc.iter().sum::<f64>() + tail)
    }

    /// `d̂` on `t = 0, Δt, …, 1` with the two-stage exponential update.
    fn trajectory(&self, grid: &GridConfig) -> Vec<f64> {
        let steps = grid.t_steps();
        let h = 1.0 / steps as f64;
        let mut out = Vec::with_capacity(steps + 1);
        let mut d = 1.0;
        out.push(d);
        for k in 0..steps {
            let t = k as f64 * h;
            let trial = d * (h * self.log_rate(d, t)).exp();
            d *= (h * self.log_rate(trial, t)).exp();
            out.push(d);
        }
        out
    }
}

/// `d̂_{x1,x2}(t)` on the grid `t = 0, dt, …, 1` (quadrature step `dlambda`).
pub fn d_hat_trajectory(x1: f64, x2: f64, dt: f64, dlambda: f64) -> Result<Vec<f64>> {
    let grid = GridConfig { dt, dx: dt, dlambda, ..GridConfig::uniform(dt) };
    grid.validate()?;
    let (x1, x2) = if x1 >= x2 { (x1, x2) } else { (x2, x1) };
    if !(0.0..=1.0).contains(&x1) || x2 < 0.0 {
        return Err(invalid(format!("d hat needs x1, x2 in [0, 1], got ({x1}, {x2})")));
    }
    Ok(PairKernel::new(x1, x2, &grid)?.trajectory(&grid))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondLevelPoint {
    pub x: f64,
    /// `(1 − ŝ_x(1))/x`
    pub ratio: f64,
    pub s_end: f64,
    /// Every `d̂` trajectory was nonincreasing.
    pub d_monotone: bool,
    /// `max (d̂(t) − e^{−t(x1+x2)})` over all pairs and grid times.
    pub d_excess: f64,
}

struct Envelope {
    best: Vec<f64>,
    monotone: bool,
    excess: f64,
}

impl Envelope {
    fn empty(len: usize) -> Self {
        Self { best: vec![f64::NEG_INFINITY; len], monotone: true, excess: f64::NEG_INFINITY }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.best.iter_mut().zip(other.best) {
            *a = a.max(b);
        }
        self.monotone &= other.monotone;
        self.excess = self.excess.max(other.excess);
        self
    }
}

/// Lower bound on the matched probability ratio of a vertex with load `x`
/// under the level-2 analysis.
pub fn second_level_ratio(x: f64, grid: &GridConfig) -> Result<SecondLevelPoint> {
    grid.validate()?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(invalid(format!("second level needs x in (0, 1], got {x}")));
    }
    let steps = grid.t_steps();
    let h = 1.0 / steps as f64;
    let nx = grid.x_steps();
    let dx = 1.0 / nx as f64;

    let env = (0..=nx)
        .into_par_iter()
        .map(|k| -> Result<Envelope> {
            let xp = k as f64 * dx;
            let kernel = PairKernel::new(x.max(xp), x.min(xp), grid)?;
            let d = kernel.trajectory(grid);
            let mut e = Envelope::empty(steps + 1);
            for (s, &v) in d.iter().enumerate() {
                let t = s as f64 * h;
                e.best[s] = (t * (xp + dx)).exp() * v;
                e.excess = e.excess.max(v - (-t * (kernel.x1 + kernel.x2)).exp());
            }
            e.monotone = d.windows(2).all(|p| p[1] <= p[0]);
            Ok(e)
        })
        .try_reduce(|| Envelope::empty(steps + 1), |a, b| Ok(a.merge(b)))?;

    let q: Vec<f64> = env.best.iter().enumerate().map(|(s, &b)| b.min((-(s as f64) * h * x).exp())).collect();

    let slope = |s: f64, k: usize| {
        let delta = 1.0 - (-(k as f64) * h * x).exp() * q[k] / s;
        if delta.abs() < 1e-9 {
            -x
        } else {
            (-x * delta).ln_1p() / delta
        }
    };
    let mut s = 1.0;
    for k in 0..steps {
        let trial = s * (h * slope(s, k)).exp();
        s *= (h * slope(trial, k)).exp();
        let floor = (-((k + 1) as f64) * h * x).exp() * q[k + 1];
        if s < floor - 1e-9 {
            return Err(Error::Numerical(format!(
                "second level: s={s} below e^(-tx) q={floor} at x={x}, step {}",
                k + 1
            )));
        }
    }
    Ok(SecondLevelPoint { x, ratio: (1.0 - s) / x, s_end: s, d_monotone: env.monotone, d_excess: env.excess })
}

pub fn second_level_report(xs: &[f64], grid: &GridConfig, target: f64) -> Result<VerifierReport> {
    let points = xs.iter().map(|&x| second_level_ratio(x, grid)).collect::<Result<Vec<_>>>()?;
    let min = points.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    let monotone = points.iter().all(|p| p.d_monotone);
    let excess = points.iter().map(|p| p.d_excess).fold(f64::NEG_INFINITY, f64::max);
    let mut r = VerifierReport::new("second-level", &format!("min ratio >= {target}"), min >= target)
        .value("min_ratio", min)
        .value("d_monotone", if monotone { 1.0 } else { 0.0 })
        .value("d_excess", excess)
        .grid(grid);
    r.table = points.iter().map(|p| (p.x, p.ratio)).collect();
    Ok(r)
}
