//! Experiment configuration, metrics and CSV output.

pub mod config;
pub mod experiment;
pub mod metrics;

pub use config::{ExperimentConfig, ModeName};
pub use experiment::{
    report, run_experiment, AggregateRow, CurveRow, ExperimentReport, SeedOutcome,
};
pub use metrics::{auc, auc_improvement, mean_std, policy_quality};
