//! Experiment driver for `dnls-core`: configuration, the conservation, increment and N-scan
//! experiments, and deterministic report emission.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::HarnessError;
pub use report::Report;
