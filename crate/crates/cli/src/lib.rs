//! Orchestration for the command-line driver: configuration resolution,
//! the full build-verify-export run, and SVG rendering of tile levels.

pub mod render;
pub mod run;

pub use run::{run, ReportFormat, RunConfig, RunOutcome};
