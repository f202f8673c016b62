//! Configuration, presets, file formats, and the command implementations
//! behind the `wignerdyn` binary.

pub mod commands;
pub mod config;
pub mod formats;

use std::path::Path;

use crate::error::{ConfigError, Error, Result};

pub use commands::{cmd_compare, cmd_run, cmd_sweep, CompareReport, Regime, RunOutcome, SweepRow};
pub use config::{parse_config, RunConfig};
pub use formats::{read_dump, write_dump, write_heatmap};

/// Presets shipped in the repository's `presets/` directory.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../../../../presets/fig1.cfg")),
    ("harmonic", include_str!("../../../../presets/harmonic.cfg")),
];

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            ConfigError::Parse(format!("unknown preset `{name}` (known: {})", known.join(", ")))
        })
}

pub fn read_config_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
