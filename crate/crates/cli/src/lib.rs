//! Config-driven experiment runner: parse an experiment description, run it
//! reproducibly, store CSV tables, a JSON summary and a checksummed manifest.

pub mod config;
pub mod demo;
pub mod output;
pub mod registry;
pub mod runner;

pub use config::{ConfigError, Experiment, ExperimentConfig, GridSpec, ModelConfig, Params, RunConfig};
pub use output::{RunManifest, Status};
pub use runner::{execute, output_dir, run, ExperimentResult, RunError, RunReport};

/// Exit status of `run`: 0 pass or warn, 2 diagnostic failure, 1 error.
pub fn exit_code(result: &Result<RunReport, RunError>) -> i32 {
    match result {
        Ok(r) if r.status == Status::Fail => 2,
        Ok(_) => 0,
        Err(_) => 1,
    }
}
