//! Seeded, reproducible experiment runner for the `qdecouple-core` audits.
//!
//! A run is fully determined by its [`ExperimentConfig`]: each trial draws from a
//! stream derived from `(master_seed, experiment, trial index)`, and aggregates are
//! computed from the records sorted by trial, so worker count never changes a number.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, Workers};
pub use error::HarnessError;
pub use report::{Aggregate, Check, ExperimentReport, Metric, TrialRecord};
pub use run::{merge_reports, run_experiment};
