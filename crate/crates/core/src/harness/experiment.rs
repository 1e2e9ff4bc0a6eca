//! Seeded, parallel replications of a configured experiment.

use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::coaf::run_coaf;
use crate::confidence::ConfidenceBackend;
use crate::env::Environment;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::regret::{time_grid, RegretCurve};
use crate::oaf::run_oaf;
use crate::policy::reward_seed;
use crate::rate::{solve_gamma_star, RateSolution};
use crate::trace::Trace;

/// Seed of the `Γ̂*` solver for an experiment with base seed `seed`, kept
/// apart from every replication stream.
pub fn solver_seed(seed: u64) -> u64 {
    reward_seed(!seed)
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    /// `None` when `Γ*` was given in the config.
    pub solver: Option<RateSolution>,
    pub gamma_star: f64,
    pub curve: RegretCurve,
    pub elapsed: Duration,
}

/// One run of the configured policy with set-stream seed `seed`. COAF
/// starts from a clone of `backend`.
pub fn run_replication(
    config: &ExperimentConfig,
    env: &Environment,
    backend: Option<&ConfidenceBackend>,
    seed: u64,
) -> Result<Trace> {
    match backend {
        None => run_oaf(env, config.horizon, seed),
        Some(b) => run_coaf(env, b.clone(), config.horizon, config.policy.xi, seed),
    }
}

/// Runs every replication (seed `config.seed + r`) in parallel and folds
/// each trace into `Q` on `grid` as it completes. Results are in replication
/// order regardless of scheduling.
pub fn accumulate_replications(
    config: &ExperimentConfig,
    env: &Environment,
    backend: Option<&ConfidenceBackend>,
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    (0..config.replications as u64)
        .into_par_iter()
        .map(|r| {
            let trace = run_replication(config, env, backend, config.seed.wrapping_add(r))?;
            Ok(trace.accumulated_on_grid(grid))
        })
        .collect()
}

/// `Γ̂*` for `env`: the configured value if present, otherwise the solver's
/// estimate.
pub fn estimate_gamma_star(config: &ExperimentConfig, env: &Environment) -> Result<(f64, Option<RateSolution>)> {
    match config.gamma_star {
        Some(g) => Ok((g, None)),
        None => {
            let solution = solve_gamma_star(env, config.gamma_star_iterations, solver_seed(config.seed))?;
            Ok((solution.gamma_star, Some(solution)))
        }
    }
}

/// Builds the environment, estimates `Γ̂*` and computes the regret curve on
/// `config.grid_points` evenly spaced times up to the horizon.
pub fn run_experiment(config: &ExperimentConfig, base: &Path) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    config.check()?;
    let env = config.build_environment(base)?;
    let backend = config.build_backend(&env, base)?;
    run_experiment_on(config, &env, backend.as_ref(), start)
}

pub fn run_experiment_on(
    config: &ExperimentConfig,
    env: &Environment,
    backend: Option<&ConfidenceBackend>,
    start: Instant,
) -> Result<ExperimentOutcome> {
    let (gamma_star, solver) = estimate_gamma_star(config, env)?;
    let grid = time_grid(config.horizon, config.grid_points);
    let accumulated = accumulate_replications(config, env, backend, &grid)?;
    Ok(ExperimentOutcome {
        solver,
        gamma_star,
        curve: RegretCurve::from_accumulated(grid, gamma_star, &accumulated),
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{EnvironmentConfig, PolicyConfig, PolicyKind};

    fn small_config(kind: PolicyKind) -> ExperimentConfig {
        ExperimentConfig {
            seed: 3,
            horizon: 400.0,
            replications: 6,
            grid_points: 8,
            output: "out".into(),
            gamma_star_iterations: 5_000,
            gamma_star: None,
            record_wall_time: false,
            environment: EnvironmentConfig::LinearPreset {
                catalog_size: 100,
                dim: 3,
                catalog_seed: 1,
            },
            policy: PolicyConfig {
                kind,
                ..PolicyConfig::default()
            },
        }
    }

    #[test]
    fn replications_are_reproducible() {
        for kind in [PolicyKind::Oaf, PolicyKind::CoafLinear, PolicyKind::CoafFinite] {
            let config = small_config(kind);
            let a = run_experiment(&config, Path::new(".")).unwrap();
            let b = run_experiment(&config, Path::new(".")).unwrap();
            assert_eq!(a.curve, b.curve);
            assert_eq!(a.gamma_star, b.gamma_star);
            assert_eq!(a.curve.replications(), 6);
        }
    }

    #[test]
    fn replication_matches_direct_run() {
        let config = small_config(PolicyKind::Oaf);
        let env = config.build_environment(Path::new(".")).unwrap();
        let grid = time_grid(config.horizon, config.grid_points);
        let rows = accumulate_replications(&config, &env, None, &grid).unwrap();
        let direct = run_oaf(&env, config.horizon, config.seed + 4).unwrap();
        assert_eq!(rows[4], direct.accumulated_on_grid(&grid));
    }

    #[test]
    fn configured_gamma_star_skips_solver() {
        let mut config = small_config(PolicyKind::Oaf);
        config.gamma_star = Some(0.25);
        let out = run_experiment(&config, Path::new(".")).unwrap();
        assert!(out.solver.is_none());
        assert_eq!(out.gamma_star, 0.25);
    }
}
