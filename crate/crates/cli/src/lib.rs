//! Command-line front end for egosense: configuration handling, the staged
//! pipeline and the subcommand bodies behind the `egosense` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{parse_config, DatasetKind, PipelineConfig};
pub use error::{CliError, CliResult};
pub use pipeline::{run_pipeline, with_threads, PipelineArtifacts};
