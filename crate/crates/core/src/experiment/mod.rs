//! File-driven experiments: TOML config in, CSV and JSON artifacts out.

mod config;
mod run;

pub use config::{Checks, ExperimentConfig, ExperimentKind, Oracle, StationarySpec, StationaryTarget, VerifySpec};
pub use run::{
    check_resources, estimated_memory, execute, resolve, run_config, run_experiment, Artifacts, CheckResult, Outcome, Overrides,
    CSV_SCHEMA_VERSION, MEMORY_LIMIT, THREADS_ENV,
};
