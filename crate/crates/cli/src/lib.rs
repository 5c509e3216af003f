//! Configuration, orchestration and output for the `randcycles` command.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::fs;
use std::path::PathBuf;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, CliResult};
use crate::output::Writer;

/// Reads the config, runs the experiment and returns the files written.
pub fn run(config_path: &std::path::Path, overrides: Overrides) -> CliResult<Vec<PathBuf>> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::resolve(&text, overrides)?;
    let mut writer = Writer::new(&cfg.out)?;
    experiments::run(&cfg, &mut writer)?;
    Ok(writer.written)
}
