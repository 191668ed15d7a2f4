//! Online stochastic matching under Poisson arrivals.
//!
//! The crate is organised around the pipeline used to study the algorithms:
//!
//! * [`model`]: instances, fractional matchings and instance generators
//!   (random, the edge-weighted hardness family, the Jaillet-Lu instance).
//! * [`lp`]: the Poisson Matching LP hierarchy solved by cutting planes over a
//!   dense simplex core, the Jaillet-Lu LP, Poisson CDF helpers and the
//!   converse Jensen checks.
//! * [`offline`]: exact maximum-weight matching on realized graphs.
//! * [`online`]: Suggested Matching, Top Half Sampling, Poisson OCS and a
//!   greedy baseline as step functions over a [`online::MatchState`].
//! * [`sim`]: arrival sampling, Monte Carlo ratio estimation and an exact
//!   expectation oracle for tiny instances.
//! * [`verify`]: numerical reproduction of the competitive-ratio constants.

pub mod error;
pub mod lp;
pub mod model;
pub mod offline;
pub mod online;
pub mod seeds;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use lp::{solve_jaillet_lu_lp, solve_lp, LpSolution, LpStatus};
pub use model::{FractionalMatching, Instance, WeightClass};
pub use online::{AlgoChoice, MatchState};
pub use sim::{monte_carlo, ArrivalModel, ArrivalSequence, McReport};
