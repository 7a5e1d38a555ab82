//! Configuration, sweeps, figures and verification for the `plateau`
//! command-line tool.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod manifest;
pub mod rows;
pub mod svg;
pub mod verify;

pub use config::{ExperimentConfig, SweepAxes};
pub use error::{CliError, Result};
pub use figures::{run_figure, FigureOutput, FigurePlan, FigureTag, Scale};
pub use manifest::Manifest;
pub use rows::ResultRow;
