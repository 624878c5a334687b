//! Benchmark harness: experiment configuration, runners and output writers.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod problems;
pub mod report;

pub use config::{Experiment, ExperimentConfig, LevelRange, SourceKind};
pub use error::BenchError;
pub use report::{write_report, Report, Table};
