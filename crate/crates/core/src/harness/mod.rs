//! Experiment orchestration: configuration, seeded replications, regret
//! curves, the OAF bound reference and report files.

pub mod bound;
pub mod config;
pub mod dataset;
pub mod experiment;
pub mod regret;
pub mod report;

pub use bound::oaf_bound_curve;
pub use config::{EnvironmentConfig, ExperimentConfig, PolicyConfig, PolicyKind};
pub use dataset::{load_feature_dataset, load_function_class, write_synthetic_catalog, CatalogSetup, FeatureCatalog};
pub use experiment::{run_experiment, ExperimentOutcome};
pub use regret::{regret_curve, time_grid, RegretCurve};
pub use report::{emit_report, summarize_report, ReportSummary};
