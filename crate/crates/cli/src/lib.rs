//! Experiment harness behind the `randla` binary: synthetic generators,
//! config-driven Monte Carlo runs and JSON/CSV reports.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod report;
pub mod solve;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, Experiment};
pub use generate::{generate_graph, generate_matrix, Profile, ProfileParams};
pub use report::{emit_report, ExperimentReport, ReportFormat, TrialRecord};
