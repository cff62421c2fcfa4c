//! Experiment runner: JSON configuration in, grid dumps, CSV reports and a
//! JSON summary out.

pub mod config;
pub mod pipeline;

pub use config::{AnalysisRequest, ConfigError, ExperimentConfig, Resolved};
pub use pipeline::{run, Outcome, Summary};

/// Exit statuses of the `cavitation` binary.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const NOT_CONVERGED: u8 = 3;
}
