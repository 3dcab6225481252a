//! Experiment driver: configuration, replicated runs, tuning and reports.

pub mod aggregate;
pub mod config;
pub mod run;
pub mod tune;

pub use aggregate::{aggregate, aggregate_dirs, welch_t, AggregateReport};
pub use config::{ConfigMap, EnvSource, ExperimentConfig, PolicyKind, PolicyParams};
pub use run::{run_experiment, write_outputs, RunOutput, RunSummary};
pub use tune::{grid_search, Grid, SearchMode, TuneReport};
