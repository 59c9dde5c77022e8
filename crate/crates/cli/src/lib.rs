//! Experiment runner wrapping the metastability toolkit: config parsing,
//! task orchestration, result serialization and the comparison report.

pub mod config;
pub mod runner;
pub mod schema;

pub use config::{ExperimentConfig, Task};
pub use runner::{compare_report, run, write_csvs, ResultBundle, TaskRecord};
