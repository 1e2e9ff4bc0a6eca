//! Experiment configuration read from TOML.
//!
//! ```toml
//! seed = 1
//! horizon = 20000.0
//! replications = 200
//!
//! [environment]
//! kind = "linear_preset"
//! catalog_size = 3000
//! dim = 5
//!
//! [policy]
//! kind = "coaf-linear"
//! xi = 0.5
//! ```

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::confidence::{ConfidenceBackend, FiniteClassState, RidgeState};
use crate::env::{ArmContext, ArmCount, ConstraintSet, Cost, DecisionSet, Delay, Environment, Noise, Regressor};
use crate::error::{Error, Result};
use crate::harness::dataset::{load_feature_dataset, load_function_class, CatalogSetup};
use crate::rate::DEFAULT_SOLVER_ITERATIONS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub horizon: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Sample budget of the `Γ̂*` solver.
    #[serde(default = "default_solver_iterations")]
    pub gamma_star_iterations: u64,
    /// Known `Γ*`, skipping the solver.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
    /// Adds the elapsed wall time to `run.json`, which then differs between runs.
    #[serde(default)]
    pub record_wall_time: bool,
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
}

fn default_replications() -> usize {
    1
}

fn default_grid_points() -> usize {
    200
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_solver_iterations() -> u64 {
    DEFAULT_SOLVER_ITERATIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentConfig {
    /// Synthetic linear catalog with the reference set law.
    LinearPreset {
        #[serde(default = "default_catalog_size")]
        catalog_size: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        catalog_seed: u64,
    },
    /// Feature catalog on disk; relative paths resolve against the config file.
    Dataset {
        features: PathBuf,
        ratings: PathBuf,
        arms: ArmCount,
        delay: Delay,
        cost: Cost,
        #[serde(default = "default_constraint")]
        constraint: ConstraintSet,
        #[serde(default)]
        rating_offset: f64,
        #[serde(default = "one")]
        rating_scale: f64,
    },
    /// Mortal bandit with geometric lifetime and rewards uniform over `rewards`.
    Mortal { mean_lifetime: f64, rewards: Vec<f64> },
    /// Every request returns the same set. Arm `i` has mean `means[i]` and,
    /// unless `features` is given, the unit feature vector `e_i`.
    Fixed {
        means: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<Vec<Vec<f64>>>,
        delay: f64,
        cost: f64,
        #[serde(default = "default_constraint")]
        constraint: ConstraintSet,
        #[serde(default)]
        noise_sd: f64,
    },
}

fn default_catalog_size() -> usize {
    3000
}

fn default_dim() -> usize {
    5
}

fn default_constraint() -> ConstraintSet {
    ConstraintSet::NonNegative
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Oaf,
    CoafLinear,
    CoafFinite,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oaf" => Ok(Self::Oaf),
            "coaf-linear" => Ok(Self::CoafLinear),
            "coaf-finite" => Ok(Self::CoafFinite),
            _ => Err(Error::Config(format!(
                "unknown policy `{s}` (expected oaf, coaf-linear or coaf-finite)"
            ))),
        }
    }
}

/// Policy and confidence-backend parameters. Backend fields are ignored by
/// policies that do not use them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Damping `ξ` of the COAF rate update.
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Ridge regularization of the linear backend.
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Covering radius of the finite backend; defaults to `1/horizon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Tabulated class; when absent, a class of `class_size` members
    /// containing the true mean function is generated from `class_seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_path: Option<PathBuf>,
    #[serde(default = "default_class_size")]
    pub class_size: usize,
    #[serde(default)]
    pub class_seed: u64,
}

fn default_xi() -> f64 {
    0.5
}

fn default_delta() -> f64 {
    0.05
}

fn default_class_size() -> usize {
    16
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            kind: PolicyKind::Oaf,
            xi: default_xi(),
            lambda: 1.0,
            delta: default_delta(),
            alpha: None,
            class_path: None,
            class_size: default_class_size(),
            class_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        let p = &self.policy;
        if p.kind != PolicyKind::Oaf {
            if !(p.xi > 0.0 && p.xi <= 1.0) {
                return Err(Error::Config("xi must lie in (0, 1]".into()));
            }
            if !(p.delta > 0.0 && p.delta < 1.0) {
                return Err(Error::Config("delta must lie in (0, 1)".into()));
            }
        }
        if p.kind == PolicyKind::CoafLinear && !(p.lambda.is_finite() && p.lambda > 0.0) {
            return Err(Error::Config("lambda must be positive".into()));
        }
        if p.kind == PolicyKind::CoafFinite {
            if p.alpha.is_some_and(|a| !(a.is_finite() && a >= 0.0)) {
                return Err(Error::Config("alpha must be non-negative".into()));
            }
            if p.class_path.is_none() && p.class_size == 0 {
                return Err(Error::Config("class_size must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Builds the environment; relative dataset paths resolve against `base`.
    pub fn build_environment(&self, base: &Path) -> Result<Environment> {
        match &self.environment {
            EnvironmentConfig::LinearPreset {
                catalog_size,
                dim,
                catalog_seed,
            } => Environment::linear_preset(*catalog_size, *dim, *catalog_seed),
            EnvironmentConfig::Dataset {
                features,
                ratings,
                arms,
                delay,
                cost,
                constraint,
                rating_offset,
                rating_scale,
            } => load_feature_dataset(&base.join(features), &base.join(ratings))?.environment(&CatalogSetup {
                arms: *arms,
                delay: *delay,
                cost: *cost,
                constraint: constraint.clone(),
                rating_offset: *rating_offset,
                rating_scale: *rating_scale,
            }),
            EnvironmentConfig::Mortal { mean_lifetime, rewards } => {
                Environment::mortal(*mean_lifetime, rewards.clone())
            }
            EnvironmentConfig::Fixed {
                means,
                features,
                delay,
                cost,
                constraint,
                noise_sd,
            } => {
                let contexts = match features {
                    Some(rows) => {
                        if rows.len() != means.len() {
                            return Err(Error::Config("features and means differ in length".into()));
                        }
                        rows.iter()
                            .enumerate()
                            .map(|(i, x)| ArmContext::new(i, x.clone()))
                            .collect()
                    }
                    None => (0..means.len())
                        .map(|i| {
                            let mut e = vec![0.0; means.len()];
                            e[i] = 1.0;
                            ArmContext::new(i, e)
                        })
                        .collect(),
                };
                let set = DecisionSet {
                    contexts,
                    delay: *delay,
                    cost: *cost,
                };
                let noise = if *noise_sd > 0.0 {
                    Noise::Gaussian { sd: *noise_sd }
                } else {
                    Noise::None
                };
                Environment::fixed(set, means.clone(), constraint.clone(), noise)
            }
        }
    }

    /// Fresh confidence backend for a COAF run on `env`, or `None` for OAF.
    pub fn build_backend(&self, env: &Environment, base: &Path) -> Result<Option<ConfidenceBackend>> {
        let p = &self.policy;
        match p.kind {
            PolicyKind::Oaf => Ok(None),
            PolicyKind::CoafLinear => Ok(Some(ConfidenceBackend::Linear(RidgeState::new(
                env.spec().dim,
                p.lambda,
                p.delta,
            )))),
            PolicyKind::CoafFinite => {
                let members = match &p.class_path {
                    Some(path) => {
                        let rows = env.sets().support().iter().map(|x| x.id + 1).max().unwrap_or(0);
                        load_function_class(&base.join(path), rows)?
                    }
                    None => generated_class(env, p.class_size, p.class_seed),
                };
                let alpha = p.alpha.unwrap_or(1.0 / self.horizon);
                Ok(Some(ConfidenceBackend::Finite(FiniteClassState::new(
                    members, p.delta, alpha,
                ))))
            }
        }
    }
}

/// The true mean function followed by `size - 1` random alternatives:
/// linear members with parameters in the unit ball for linear models, and
/// Gaussian perturbations (sd 0.5, clipped to `[-1, 1]`) of the table for
/// tabulated models.
pub fn generated_class(env: &Environment, size: usize, seed: u64) -> Vec<Regressor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = env.model().regressor.clone();
    let mut members = vec![truth.clone()];
    for _ in 1..size {
        let member = match &truth {
            Regressor::Linear(theta) => Regressor::Linear(crate::env::unit_ball(theta.len(), &mut rng)),
            Regressor::Table(values) => Regressor::Table(
                values
                    .iter()
                    .map(|&v| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        (v + 0.5 * z).clamp(-1.0, 1.0)
                    })
                    .collect(),
            ),
        };
        members.push(member);
    }
    members
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
horizon = 2500.5
replications = 3
gamma_star_iterations = 20000

[environment]
kind = "dataset"
features = "data/features.csv"
ratings = "data/ratings.csv"
arms = { kind = "uniform", min = 2, max = 4 }
delay = { kind = "fixed", value = 1.5 }
cost = { kind = "beta", alpha = 2.0, beta = 3.0 }
constraint = [1, 3]
rating_scale = 0.25

[policy]
kind = "coaf-finite"
xi = 0.3
alpha = 1e-4
class_path = "class.csv"
"#;

    #[test]
    fn round_trips_through_toml() {
        let config = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(config.grid_points, 200);
        assert_eq!(config.policy.kind, PolicyKind::CoafFinite);
        let text = config.to_toml().unwrap();
        let again = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(config, again);
        assert_eq!(text, again.to_toml().unwrap());
    }

    #[test]
    fn round_trips_awkward_floats() {
        let mut config = ExperimentConfig::from_toml(SAMPLE).unwrap();
        config.horizon = 0.1 + 0.2;
        config.gamma_star = Some(-1.0 / 3.0);
        config.policy.xi = f64::MIN_POSITIVE;
        let again = ExperimentConfig::from_toml(&config.to_toml().unwrap()).unwrap();
        assert_eq!(config, again);
    }

    #[test]
    fn defaults_and_policy_names() {
        let config =
            ExperimentConfig::from_toml("seed = 1\nhorizon = 100.0\n[environment]\nkind = \"linear_preset\"\n")
                .unwrap();
        assert_eq!(config.policy, PolicyConfig::default());
        assert_eq!(
            config.environment,
            EnvironmentConfig::LinearPreset {
                catalog_size: 3000,
                dim: 5,
                catalog_seed: 0
            }
        );
        assert_eq!("coaf-linear".parse::<PolicyKind>().unwrap(), PolicyKind::CoafLinear);
        assert!("ucb".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        let base = "seed = 1\nhorizon = 100.0\n[environment]\nkind = \"linear_preset\"\n";
        assert!(ExperimentConfig::from_toml(&format!("{base}[policy]\nkind = \"coaf-linear\"\nxi = 1.5\n")).is_err());
        assert!(ExperimentConfig::from_toml(&base.replace("100.0", "-1.0")).is_err());
        assert!(ExperimentConfig::from_toml(&format!("bogus = 1\n{base}")).is_err());
    }

    #[test]
    fn fixed_environment_uses_unit_features() {
        let config = ExperimentConfig::from_toml(
            "seed = 1\nhorizon = 10.0\n[environment]\nkind = \"fixed\"\nmeans = [0.5, -0.5]\ndelay = 1.0\ncost = 0.0\n",
        )
        .unwrap();
        let env = config.build_environment(Path::new(".")).unwrap();
        let set = env.sampler(0).sample_decision_set();
        assert_eq!(set.contexts[1].features, vec![0.0, 1.0]);
        assert_eq!(env.spec().dim, 2);
    }

    #[test]
    fn generated_class_contains_truth() {
        let env = Environment::linear_preset(30, 3, 2).unwrap();
        let class = generated_class(&env, 5, 9);
        assert_eq!(class.len(), 5);
        assert_eq!(class[0], env.model().regressor);
    }
}
