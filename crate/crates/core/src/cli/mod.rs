//! Command-line front end: config loading, experiment dispatch and reports.

pub mod config;
pub mod report;
pub mod run;

pub use config::{
    load_config, parse_config, ConfigError, Experiment, ExperimentConfig, ExperimentParams,
};
pub use report::{write_outputs, CheckRecord, Report, Table};
pub use run::run_experiment;
