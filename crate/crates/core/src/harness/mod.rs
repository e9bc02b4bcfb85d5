//! Experiment orchestration: configuration, the round loop, Monte-Carlo
//! fan-out and CSV output.

mod config;
mod experiment;
mod output;
mod simulation;

pub use config::{
    has_errors, validate_config, validate_dataset, ConfigError, Diagnostic, ExperimentConfig, Severity,
};
pub use experiment::{
    load_dataset, resolve_path, run_experiment, run_experiment_with_dataset, ExperimentError,
    ExperimentResult, PolicyResult,
};
pub use output::{
    aggregate_file_name, aggregate_header, trace_file_name, write_aggregate, write_outputs, write_traces,
    TRACE_COLUMNS,
};
pub use simulation::{run_single, RunError, Simulation};
