//! Contextual bandits in which decision sets must be requested, at a cost
//! and after a delay, before arms can be pulled.
//!
//! The crate provides the environment model, the optimal average-reward
//! rate solver, the OAF policy for known means, the COAF policy driven by
//! upper confidence bounds, and an experiment harness producing regret
//! curves and reports.

pub mod coaf;
pub mod confidence;
pub mod eluder;
pub mod env;
pub mod error;
pub mod harness;
pub mod oaf;
pub mod policy;
pub mod rate;
pub mod trace;

pub use coaf::{run_coaf, CoafState};
pub use confidence::{beta_generic, beta_linear, ConfidenceBackend, FiniteClassState, RidgeState, UcbBackend};
pub use eluder::eluder_dimension_bruteforce;
pub use env::{
    ArmContext, ConstraintSet, DecisionSet, Environment, EnvironmentSampler, Noise, ProblemSpec, Regressor,
    RewardModel, SetDistribution,
};
pub use error::{Error, Result};
pub use oaf::{run_oaf, OafState};
pub use policy::{run_policy, Policy, SetOutcome};
pub use rate::{g_value, h_value, optimal_selection, solve_gamma_star, RankedMeans, RateEstimate, RateSolution};
pub use trace::{Event, EventKind, SetRecord, Trace};
