//! File formats, configuration, pipeline orchestration and the command-line
//! interface on top of `qrdx-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod report;

pub use config::{Method, PipelineConfig};
pub use error::{Error, Result};
pub use report::{BenchmarkReport, BenchmarkRow};
