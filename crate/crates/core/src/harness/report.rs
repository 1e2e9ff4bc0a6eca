//! `regret.csv` and `run.json` emission, and summaries of emitted reports.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{ConstraintSet, Environment, ProblemSpec};
use crate::error::{Error, Result};
use crate::harness::bound::oaf_bound_curve;
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::ExperimentOutcome;
use crate::harness::regret::RegretCurve;

pub const REGRET_FILE: &str = "regret.csv";
pub const RUN_FILE: &str = "run.json";

/// Declared bounds echoed in `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub max_arms: usize,
    pub min_delay: f64,
    pub max_delay: f64,
    pub cost_bound: f64,
    pub dim: usize,
    pub eta: f64,
}

impl SpecSummary {
    pub fn of(spec: &ProblemSpec) -> Self {
        Self {
            max_arms: spec.max_arms,
            min_delay: spec.min_delay,
            max_delay: spec.max_delay,
            cost_bound: spec.cost_bound,
            dim: spec.dim,
            eta: spec.eta(),
        }
    }

    pub fn to_spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(
            self.max_arms,
            self.min_delay,
            self.max_delay,
            self.cost_bound,
            ConstraintSet::NonNegative,
            self.dim,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub spec: SpecSummary,
    pub gamma_star: f64,
    /// Solver residual; absent when `Γ*` was configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_star_residual: Option<f64>,
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

/// Writes `regret.csv` (`t,mean,q05,q95,n_replications`) and `run.json` to
/// `dir`. Both files depend only on their inputs unless
/// `config.record_wall_time` is set.
pub fn emit_report(
    outcome: &ExperimentOutcome,
    config: &ExperimentConfig,
    env: &Environment,
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_regret_csv(&outcome.curve, &dir.join(REGRET_FILE))?;
    let record = RunRecord {
        config: config.clone(),
        spec: SpecSummary::of(env.spec()),
        gamma_star: outcome.gamma_star,
        gamma_star_residual: outcome.solver.map(|s| s.residual),
        replications: outcome.curve.replications(),
        wall_time_seconds: config.record_wall_time.then_some(outcome.elapsed.as_secs_f64()),
    };
    let mut json = serde_json::to_string_pretty(&record)?;
    json.push('\n');
    fs::write(dir.join(RUN_FILE), json)?;
    Ok(())
}

pub fn write_regret_csv(curve: &RegretCurve, path: &Path) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["t", "mean", "q05", "q95", "n_replications"])?;
    let n = curve.replications().to_string();
    for i in 0..curve.mean.len() {
        out.write_record([
            curve.grid[i].to_string(),
            curve.mean[i].to_string(),
            curve.q05[i].to_string(),
            curve.q95[i].to_string(),
            n.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One row of `regret.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub t: f64,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
    pub n_replications: usize,
}

pub fn read_regret_csv(path: &Path) -> Result<Vec<RegretRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<RegretRow>, _>>()?;
    Ok(rows)
}

/// Headline numbers of an emitted report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub policy: String,
    pub horizon: f64,
    pub replications: usize,
    pub gamma_star: f64,
    pub final_mean_regret: Option<f64>,
    pub final_q05: Option<f64>,
    pub final_q95: Option<f64>,
    /// Mean regret at the horizon over mean regret at the grid point
    /// closest to half the horizon.
    pub growth_ratio: Option<f64>,
    /// OAF regret bound at the horizon for the recorded problem bounds.
    pub oaf_bound_at_horizon: f64,
    /// Whether the mean curve stays under the OAF bound at every grid point.
    pub below_oaf_bound: bool,
}

pub fn summarize_report(dir: &Path) -> Result<ReportSummary> {
    let text = fs::read_to_string(dir.join(RUN_FILE))?;
    let record: RunRecord = serde_json::from_str(&text)?;
    let rows = read_regret_csv(&dir.join(REGRET_FILE))?;
    let spec = record.spec.to_spec()?;
    let grid: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let bound = oaf_bound_curve(&spec, &grid);
    let last = rows.last();
    let half = rows.iter().min_by(|a, b| {
        (a.t - record.config.horizon / 2.0)
            .abs()
            .total_cmp(&(b.t - record.config.horizon / 2.0).abs())
    });
    let policy = serde_json::to_value(record.config.policy.kind)?
        .as_str()
        .ok_or_else(|| Error::Config("policy kind".into()))?
        .to_string();
    Ok(ReportSummary {
        policy,
        horizon: record.config.horizon,
        replications: record.replications,
        gamma_star: record.gamma_star,
        final_mean_regret: last.map(|r| r.mean),
        final_q05: last.map(|r| r.q05),
        final_q95: last.map(|r| r.q95),
        growth_ratio: last.zip(half).map(|(l, h)| l.mean / h.mean),
        oaf_bound_at_horizon: oaf_bound_curve(&spec, &[record.config.horizon])[0],
        below_oaf_bound: rows.iter().zip(&bound).all(|(r, b)| r.mean <= *b),
    })
}
