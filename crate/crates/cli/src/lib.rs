//! Experiment runner for `bilab-core`: configuration, dispatch, reports and
//! CSV export.

pub mod config;
pub mod report;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Kind};
pub use report::{export_plot_data, ExportError, Record, RunReport, Series};
pub use run::{run, RunError};
