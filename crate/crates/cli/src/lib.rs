//! Command-line orchestration of the emotion corpus pipeline.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_ablate, cmd_build, cmd_label, cmd_lexicon_build, cmd_stats, cmd_train_eval};
pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
