//! Command-line pipeline around `fanlink-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod labels;
pub mod pipeline;

pub use config::{Overrides, PipelineConfig, ResolverChoice};
pub use error::CliError;
