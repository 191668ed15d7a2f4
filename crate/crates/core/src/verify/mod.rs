//! Numerical reproduction of the ratio constants: closed forms, the
//! first- and second-level Poisson OCS recurrences, the edge-weighted
//! hardness recursion and randomized checks of the supporting inequalities.

mod closed_form;
mod first_level;
mod hardness;
mod properties;
mod second_level;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::lp::jensen::LAMBDA_CAP;

pub use closed_form::{
    jaillet_lu_closed_form, jaillet_lu_report, top_half_b, top_half_gamma, top_half_gamma_report, top_half_ode_check,
    top_half_ode_report, JailletLuClosedForm, OdeCheck,
};
pub use first_level::{default_x_grid, first_level_curve, first_level_report, FirstLevelCurve};
pub use hardness::{hardness_bound, hardness_bound_with, hardness_f, hardness_report, HardnessBound, KStrategy};
pub use properties::property_suite;
pub use second_level::{d_hat_trajectory, second_level_ratio, second_level_report, SecondLevelPoint};

/// Discretization of the second-level recurrence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub dt: f64,
    pub dx: f64,
    /// Quadrature step in `λ`.
    pub dlambda: f64,
    /// `λ` integrals stop here; at most 40.
    pub lambda_cap: f64,
}

impl GridConfig {
    /// `Δt = Δx = Δλ = delta`.
    pub fn uniform(delta: f64) -> Self {
        Self { dt: delta, dx: delta, dlambda: delta, lambda_cap: LAMBDA_CAP }
    }

    pub fn t_steps(&self) -> usize {
        (1.0 / self.dt).round() as usize
    }

    pub fn x_steps(&self) -> usize {
        (1.0 / self.dx).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let integral = |d: f64| d > 0.0 && d <= 1.0 && ((1.0 / d) - (1.0 / d).round()).abs() <= 1e-6 * (1.0 / d);
        if !integral(self.dt) || !integral(self.dx) {
            return Err(invalid(format!("1/dt and 1/dx must be integers, got dt={}, dx={}", self.dt, self.dx)));
        }
        if !(self.dlambda > 0.0 && self.dlambda <= self.dt * (1.0 + 1e-12)) {
            return Err(invalid(format!("need 0 < dlambda <= dt, got dlambda={}", self.dlambda)));
        }
        if !(self.lambda_cap > 0.0 && self.lambda_cap <= LAMBDA_CAP) {
            return Err(invalid(format!("lambda_cap must lie in (0, {LAMBDA_CAP}]")));
        }
        Ok(())
    }
}

/// Outcome of one verification target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifierReport {
    pub name: String,
    /// The condition `pass` was judged against.
    pub target: String,
    pub pass: bool,
    pub params: BTreeMap<String, f64>,
    pub values: BTreeMap<String, f64>,
    /// Per-grid-point values, such as a ratio curve over `x`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl VerifierReport {
    pub fn new(name: &str, target: &str, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            target: target.to_string(),
            pass,
            params: BTreeMap::new(),
            values: BTreeMap::new(),
            table: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    pub fn param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    pub fn grid(self, g: &GridConfig) -> Self {
        self.param("dt", g.dt).param("dx", g.dx).param("dlambda", g.dlambda).param("lambda_cap", g.lambda_cap)
    }

    pub fn note(mut self, msg: impl Into<String>) -> Self {
        self.notes.push(msg.into());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `section,key,value` rows; table rows use `table` with the grid point
    /// as key.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,value\n");
        out += &format!("report,name,{}\n", self.name);
        out += &format!("report,pass,{}\n", self.pass);
        out += &format!("report,target,\"{}\"\n", self.target.replace('"', "'"));
        for (k, v) in &self.params {
            out += &format!("param,{k},{v}\n");
        }
        for (k, v) in &self.values {
            out += &format!("value,{k},{v}\n");
        }
        for (x, y) in &self.table {
            out += &format!("table,{x},{y}\n");
        }
        for n in &self.notes {
            out += &format!("note,,\"{}\"\n", n.replace('"', "'"));
        }
        out
    }
}
