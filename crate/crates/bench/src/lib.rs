//! Monte Carlo experiment driver for the DRSS estimators.
//!
//! An [`ExperimentConfig`] names a family (placement, noise, exponent and
//! model-uncertainty sweeps, or the per-iteration joint estimator study), the
//! values swept and the estimators to run. [`run_experiment`] runs the trials
//! in parallel and returns one [`ResultRow`] per estimator and sweep point.

pub mod config;
pub mod experiment;
pub mod output;
pub mod trial;

pub use config::{ExperimentConfig, Family, Overrides, SweepKey};
pub use experiment::{run_experiment, ResultRow};
pub use output::Format;
pub use trial::{run_trial, Layout, TrialSpec};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl BenchError {
    /// Process exit code: 1 for configuration errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Runtime(_) => 2,
        }
    }
}
