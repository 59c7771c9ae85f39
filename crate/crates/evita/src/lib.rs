//! File formats, experiment harness and command line for `evita-core`.

pub mod builtin;
pub mod config;
pub mod formats;
pub mod harness;

pub use config::{ExperimentConfig, SolverName};
pub use harness::{run_experiment, ExperimentOutcome, Manifest};
