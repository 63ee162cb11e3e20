//! Experiment harness for layered fast/slow controllers.
//!
//! Reads flat `key = value` configurations, runs seeded training pipelines
//! for plain TD3, the closed- and open-loop layered controllers and their
//! real-time (delayed) variants, and writes learning curves, metrics,
//! trajectories, activation logs and checkpoints as CSV, SVG and binary
//! files.

pub mod checkpoint;
pub mod config;
mod error;
pub mod experiment;
pub mod output;
pub mod plot;
pub mod sweep;

pub use config::{Algorithm, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_seed, ExperimentResult, RunMetrics, SeedRun};
