//! File formats, run configuration and the command-line front end.

pub mod cli;
mod config;
mod output;
mod touchstone;

use thiserror::Error;

pub use config::{
    load_config, load_config_with, BackgroundConfig, DriveConfig, EstimateConfig, GridConfig,
    InhomogeneityConfig, ModeConfig, RabiConfig, ResonatorConfig, RunConfig, SweepConfig, PRESETS,
};
pub use output::{svg_line_plot, write_atomic, Table};
pub use touchstone::{parse_touchstone, write_touchstone};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("line {0}: malformed or misplaced option line")]
    BadOptionLine(usize),
    #[error("line {0}: expected 9 numeric columns for a two-port row")]
    BadRow(usize),
    #[error("line {0}: frequencies must be strictly increasing")]
    NonMonotoneGrid(usize),
    #[error("unsupported file: {0}")]
    Unsupported(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    File(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}
