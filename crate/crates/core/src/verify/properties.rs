//! Randomized checks of the inequalities behind the ratio analysis.

use rand::Rng;

use super::{d_hat_trajectory, VerifierReport};
use crate::error::{invalid, Result};
use crate::lp::jensen::{check_second_level_cj, DrFamily};
use crate::lp::poisson::poisson_cdf;
use crate::lp::{solve_lp, LpStatus};
use crate::model::{gen_random, GenParams, WeightClass};
use crate::seeds::{derive_seed, derived_rng, SimRng};

const FD_STEP: f64 = 1e-4;

struct Family {
    key: &'static str,
    checked: usize,
    failures: Vec<String>,
    extra: Vec<(&'static str, f64)>,
}

impl Family {
    fn new(key: &'static str) -> Self {
        Self { key, checked: 0, failures: Vec::new(), extra: Vec::new() }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures.push(format!("{}: {}", self.key, detail()));
        }
    }
}

fn two_step(rho: f64) -> f64 {
    (2.0 * rho).min(1.0)
}

/// Both sides of the two-choice inequality for one online type.
pub(crate) fn two_choice_sides(rho_i: f64, rho: &[f64]) -> (f64, f64) {
    let lhs = two_step(rho_i) - rho_i;
    let rhs = 0.5 * rho.iter().map(|&r| two_step(rho_i) - two_step(rho_i - r) - (2.0 * r - 1.0).max(0.0)).sum::<f64>();
    (lhs, rhs)
}

fn random_family(rng: &mut SimRng, regime: usize) -> DrFamily {
    let (a, b) = match regime {
        0 => {
            let a = rng.random_range(1.0..5.0);
            (a, rng.random_range(1.0..=a))
        }
        1 => (rng.random_range(1.0..5.0), rng.random_range(0.01..1.0)),
        _ => {
            let a: f64 = rng.random_range(0.01..1.0);
            (a, rng.random_range(0.005..=a))
        }
    };
    DrFamily { a, b }
}

fn check_two_choice(trials: usize, seed: u64) -> Family {
    let mut fam = Family::new("two-choice");
    let mut rng = derived_rng(seed, "properties/two-choice", 0);
    for _ in 0..trials {
        let rho_i: f64 = rng.random_range(0.0..=1.0);
        let m = rng.random_range(1..=6);
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        let rho: Vec<f64> = w.iter().map(|v| rho_i * v / total).collect();
        let (lhs, rhs) = two_choice_sides(rho_i, &rho);
        fam.record(lhs >= rhs - 1e-12, || format!("rho_i={rho_i}, rho={rho:?}, lhs={lhs}, rhs={rhs}"));
    }
    fam
}

fn check_poisson_derivative(trials: usize, seed: u64) -> Family {
    let mut fam = Family::new("poisson-derivative");
    let mut rng = derived_rng(seed, "properties/poisson", 0);
    let h = 1e-5;
    for _ in 0..trials {
        let k: u32 = rng.random_range(1..=12);
        let lambda: f64 = rng.random_range(2.0 * h..20.0);
        let fd = (poisson_cdf(k, lambda + h) - poisson_cdf(k, lambda - h)) / (2.0 * h);
        let exact = poisson_cdf(k - 1, lambda) - poisson_cdf(k, lambda);
        fam.record((fd - exact).abs() <= 1e-6, || format!("k={k}, lambda={lambda}, fd={fd}, exact={exact}"));
    }
    fam
}

fn check_ordered_jensen(trials: usize, seed: u64) -> Family {
    let mut fam = Family::new("ordered-jensen");
    let mut rng = derived_rng(seed, "properties/jensen", 0);
    for n in 0..trials {
        let f = random_family(&mut rng, n % 3);
        let steps = rng.random_range(2..=8);
        let mut u: Vec<f64> = (0..steps).map(|_| rng.random_range(0.0..=1.0)).collect();
        let mut v: Vec<f64> = (0..steps).map(|_| rng.random_range(0.0..=1.0)).collect();
        u.sort_by(f64::total_cmp);
        v.sort_by(f64::total_cmp);
        let mu: Vec<f64> = (0..steps).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = mu.iter().sum();
        let (mut avg, mut ey, mut ez) = (0.0, 0.0, 0.0);
        for k in 0..steps {
            let (y, z) = (u[k].min(v[k]), u[k].max(v[k]));
            let m = mu[k] / total;
            avg += m * f.eval(y, z);
            ey += m * y;
            ez += m * z;
        }
        let at_mean = f.eval(ey, ez);
        fam.record(avg <= at_mean + 1e-9, || format!("A={}, B={}, mean f={avg}, f(mean)={at_mean}", f.a, f.b));
    }
    fam
}

fn check_dr_hessian(trials: usize, seed: u64) -> Family {
    let mut fam = Family::new("dr-hessian");
    let mut rng = derived_rng(seed, "properties/hessian", 0);
    let h = FD_STEP;
    for n in 0..trials {
        let f = random_family(&mut rng, n % 3);
        let z: f64 = rng.random_range(3.0 * h..1.0 - 2.0 * h);
        let y: f64 = rng.random_range(h..z - h);
        let e = |y: f64, z: f64| f.eval(y, z);
        let fyy = (e(y + h, z) - 2.0 * e(y, z) + e(y - h, z)) / (h * h);
        let fzz = (e(y, z + h) - 2.0 * e(y, z) + e(y, z - h)) / (h * h);
        let fyz = (e(y + h, z + h) - e(y + h, z - h) - e(y - h, z + h) + e(y - h, z - h)) / (4.0 * h * h);
        let worst = fyy.max(fzz).max(fyz);
        fam.record(worst <= 1e-6, || format!("A={}, B={}, y={y}, z={z}, hessian=({fyy}, {fyz}, {fzz})", f.a, f.b));
    }
    fam
}

fn check_pair_decay(trials: usize, seed: u64) -> Result<Family> {
    let mut fam = Family::new("pair-decay");
    let mut rng = derived_rng(seed, "properties/decay", 0);
    let dt = 1e-3;
    let mut scaled: f64 = 0.0;
    for _ in 0..trials {
        let a: f64 = rng.random_range(0.0..1.0);
        let b: f64 = rng.random_range(0.0..=a);
        let d = d_hat_trajectory(a, b, dt, dt)?;
        let worst = d
            .iter()
            .enumerate()
            .map(|(s, v)| (s, v - (-(s as f64) * dt * (a + b)).exp()))
            .fold((0, f64::NEG_INFINITY), |m, p| if p.1 > m.1 { p } else { m });
        scaled = scaled.max(worst.1 / (dt * (a + b)).powi(2));
        fam.record(worst.1 <= 1e-6, || format!("x1={a}, x2={b}, excess={} at t={}", worst.1, worst.0 as f64 * dt));
    }
    // Excess in units of (Δt(x1+x2))², the local error order of the scheme.
    fam.extra.push(("max_scaled_excess", scaled));
    Ok(fam)
}

fn check_second_level_jensen(trials: usize, seed: u64) -> Result<(Family, Vec<String>)> {
    let mut fam = Family::new("second-level-jensen");
    let mut notes = Vec::new();
    let mut rng = derived_rng(seed, "properties/cj", 0);
    let per_instance = 20;
    let params = GenParams {
        n_types: 5,
        n_offline: 4,
        edge_prob: 0.6,
        weight_class: WeightClass::EdgeWeighted,
        ..GenParams::default()
    };
    let mut k = 0u64;
    while fam.checked < trials {
        let inst = gen_random(&params, derive_seed(seed, "properties/cj-instance", k))?;
        k += 1;
        let sol = solve_lp(&inst, 2, 1e-9)?;
        if sol.status != LpStatus::Optimal {
            notes.push(format!("second-level-jensen: instance {} hit the cut limit, skipped", k - 1));
            continue;
        }
        for n in 0..per_instance.min(trials - fam.checked) {
            let j1 = rng.random_range(0..inst.offline_count);
            let j2 = (j1 + rng.random_range(1..inst.offline_count)) % inst.offline_count;
            let f = random_family(&mut rng, n % 3);
            let c = check_second_level_cj(&inst, &sol.matching, j1, j2, f)?;
            fam.record(c.pass, || {
                format!("instance {}, j=({j1}, {j2}), A={}, B={}, lhs={}, rhs={}", k - 1, f.a, f.b, c.lhs, c.rhs)
            });
        }
    }
    Ok((fam, notes))
}

/// Runs every family `trials` times. The report lists each failing sample.
pub fn property_suite(seed: u64, trials: usize) -> Result<VerifierReport> {
    if trials < 100 {
        return Err(invalid(format!("property suite needs at least 100 trials, got {trials}")));
    }
    let (cj, notes) = check_second_level_jensen(trials, seed)?;
    let families = [
        check_two_choice(trials, seed),
        check_poisson_derivative(trials, seed),
        check_ordered_jensen(trials, seed),
        check_dr_hessian(trials, seed),
        check_pair_decay(trials, seed)?,
        cj,
    ];
    let pass = families.iter().all(|f| f.failures.is_empty());
    let mut r = VerifierReport::new("properties", "no failing sample in any family", pass)
        .param("seed", seed as f64)
        .param("trials", trials as f64);
    for f in &families {
        r = r.value(&format!("{}.checked", f.key), f.checked as f64);
        r = r.value(&format!("{}.failed", f.key), f.failures.len() as f64);
        for (k, v) in &f.extra {
            r = r.value(&format!("{}.{k}", f.key), *v);
        }
    }
    r.notes = families.into_iter().flat_map(|f| f.failures).chain(notes).collect();
    Ok(r)
}
