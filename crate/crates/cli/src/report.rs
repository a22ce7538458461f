//! Run reports and comma-delimited plot data.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::ExperimentConfig;

/// One checked quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub value: f64,
    pub predicted: Option<f64>,
    pub ratio: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Record {
    /// Passes when `|value - predicted| <= tolerance`.
    pub fn absolute(name: impl Into<String>, value: f64, predicted: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            predicted: Some(predicted),
            ratio: ratio(value, predicted),
            tolerance,
            pass: (value - predicted).abs() <= tolerance,
        }
    }

    /// Passes when `value <= bound (1 + tolerance)`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            predicted: Some(bound),
            ratio: ratio(value, bound),
            tolerance,
            pass: value <= bound * (1.0 + tolerance),
        }
    }

    /// Passes when `low <= value <= high`; `tolerance` records the width.
    pub fn within(name: impl Into<String>, value: f64, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            value,
            predicted: None,
            ratio: None,
            tolerance: high - low,
            pass: (low..=high).contains(&value),
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            predicted: Some(1.0),
            ratio: None,
            tolerance: 0.0,
            pass,
        }
    }
}

fn ratio(value: f64, predicted: f64) -> Option<f64> {
    (predicted != 0.0).then(|| value / predicted)
}

/// A sweep exported as `(parameter, value, predicted)` rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub quantity: String,
    pub parameter: String,
    pub unit: String,
    pub predicted_label: String,
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub timestamp: u64,
    pub seed: Option<u64>,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub series: Vec<Series>,
    pub provenance: Provenance,
}

/// SHA-256 of the config with the output location reset, so the same
/// experiment hashes alike wherever it writes.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut bare = config.clone();
    bare.output = Default::default();
    let text = bare.to_toml().unwrap_or_default();
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunReport {
    pub fn new(config: ExperimentConfig, records: Vec<Record>, series: Vec<Series>) -> Self {
        let provenance = Provenance {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            seed: config.parameters.seed,
            config_hash: config_hash(&config),
        };
        Self {
            config,
            records,
            series,
            provenance,
        }
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn series(&self, quantity: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.quantity == quantity)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("unknown quantity '{0}'")]
    UnknownQuantity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes one series as CSV: `#` provenance lines, a header row, then one row
/// per point. The run timestamp is left out so reruns give identical bytes.
pub fn export_plot_data<W: Write>(report: &RunReport, quantity: &str, mut out: W) -> Result<(), ExportError> {
    let s = report
        .series(quantity)
        .ok_or_else(|| ExportError::UnknownQuantity(quantity.to_string()))?;
    let p = &report.provenance;
    writeln!(out, "# quantity: {}", s.quantity)?;
    writeln!(out, "# kind: {}", report.config.kind().name())?;
    writeln!(out, "# version: {}", p.version)?;
    writeln!(out, "# config_sha256: {}", p.config_hash)?;
    match p.seed {
        Some(seed) => writeln!(out, "# seed: {seed}")?,
        None => writeln!(out, "# seed: none")?,
    }
    writeln!(out, "# predicted: {}", s.predicted_label)?;
    writeln!(out, "{},{} [{}],predicted", s.parameter, s.quantity, s.unit)?;
    for (x, y, z) in &s.points {
        writeln!(out, "{x:e},{y:e},{z:e}")?;
    }
    Ok(())
}
