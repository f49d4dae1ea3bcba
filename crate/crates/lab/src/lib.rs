//! Experiment harness for `pairlab-core`: TOML configs, file formats,
//! seeded parallel replication and verdict reporting.

pub mod config;
pub mod formats;
pub mod harness;
pub mod stats;

pub use config::{ExperimentConfig, Mode};
pub use harness::{describe, run, RunSummary, Verdict};
