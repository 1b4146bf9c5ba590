//! Configuration, pulse files and CSV output for the `rcp` experiment runner.

pub mod config;
pub mod output;
pub mod pulsefile;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind};
pub use run::{execute, run, RunContext};
