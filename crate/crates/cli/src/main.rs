use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use reqbandit::harness::config::{ExperimentConfig, PolicyKind};
use reqbandit::harness::dataset::write_synthetic_catalog;
use reqbandit::harness::experiment::{run_experiment_on, solver_seed};
use reqbandit::harness::{emit_report, summarize_report};
use reqbandit::rate::solve_gamma_star;

#[derive(Parser)]
#[command(
    name = "reqbandit",
    version,
    about = "Contextual bandits with arm request costs and delays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the optimal average reward of the configured environment.
    Rate {
        #[arg(long)]
        config: PathBuf,
        /// Number of sampled decision sets [default: from config]
        #[arg(long)]
        iterations: Option<u64>,
        /// Solver seed [default: derived from the config seed]
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the configured experiment and write regret.csv and run.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// oaf, coaf-linear or coaf-finite [default: from config]
        #[arg(long)]
        policy: Option<PolicyKind>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Solver budget for the regret baseline [default: from config]
        #[arg(long)]
        iterations: Option<u64>,
        /// Report directory [default: from config]
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Summarize a report directory written by `simulate`.
    Report {
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a synthetic linear feature catalog (features.csv, ratings.csv).
    Catalog {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 3000)]
        size: usize,
        #[arg(long, default_value_t = 5)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        ratings_per_arm: usize,
    },
}

fn load(path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let config = ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

/// Writes `text` to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Rate {
            config,
            iterations,
            seed,
        } => {
            let (config, base) = load(&config)?;
            let env = config.build_environment(&base)?;
            let solution = solve_gamma_star(
                &env,
                iterations.unwrap_or(config.gamma_star_iterations),
                seed.unwrap_or_else(|| solver_seed(config.seed)),
            )?;
            emit(&serde_json::to_string_pretty(&solution)?)?;
        }
        Command::Simulate {
            config: path,
            policy,
            seed,
            horizon,
            replications,
            iterations,
            output,
        } => {
            let start = Instant::now();
            let (mut config, base) = load(&path)?;
            if let Some(kind) = policy {
                config.policy.kind = kind;
            }
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(horizon) = horizon {
                config.horizon = horizon;
            }
            if let Some(replications) = replications {
                config.replications = replications;
            }
            if let Some(iterations) = iterations {
                config.gamma_star_iterations = iterations;
            }
            if let Some(output) = output {
                config.output = output;
            }
            config.check()?;
            let env = config.build_environment(&base)?;
            let backend = config.build_backend(&env, &base)?;
            let outcome = run_experiment_on(&config, &env, backend.as_ref(), start)?;
            emit_report(&outcome, &config, &env, &config.output)
                .with_context(|| format!("writing report to {}", config.output.display()))?;
            emit(&serde_json::to_string_pretty(&summarize_report(&config.output)?)?)?;
        }
        Command::Report { output } => {
            let summary =
                summarize_report(&output).with_context(|| format!("reading report in {}", output.display()))?;
            emit(&serde_json::to_string_pretty(&summary)?)?;
        }
        Command::Catalog {
            output,
            size,
            dim,
            seed,
            ratings_per_arm,
        } => {
            let (features, ratings) = write_synthetic_catalog(&output, size, dim, seed, ratings_per_arm)?;
            emit(&format!("{}\n{}", features.display(), ratings.display()))?;
        }
    }
    Ok(())
}
