//! Experiment configuration: a TOML document with `[experiment]`,
//! `[parameters]`, `[tolerances]` and `[output]` sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialise config: {0}")]
    Serialise(#[from] toml::ser::Error),
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Apply,
    Wavelet,
    Levelsplit,
    Thm12,
    Thm13,
    Sharpness,
    Scaling,
    Rough,
    Fefferman,
    Spherical,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Apply => "apply",
            Kind::Wavelet => "wavelet",
            Kind::Levelsplit => "levelsplit",
            Kind::Thm12 => "thm12",
            Kind::Thm13 => "thm13",
            Kind::Sharpness => "sharpness",
            Kind::Scaling => "scaling",
            Kind::Rough => "rough",
            Kind::Fefferman => "fefferman",
            Kind::Spherical => "spherical",
        }
    }

    /// Kinds that draw random signs or data and therefore need a seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, Kind::Levelsplit | Kind::Thm12 | Kind::Spherical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub kind: Kind,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    1
}

/// Numeric parameters; unset entries take the per-kind defaults of the runner.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_range: Option<[u64; 2]>,
    /// Explicit `N` values; takes precedence over `n_range`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_range: Option<[i32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<usize>,
    /// Multiplier, sphere symbol or radial factor name, depending on the kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radial: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub oracle: f64,
    pub growth_spread: f64,
    pub khintchine_low: f64,
    pub khintchine_high: f64,
    pub harmonic_spread: f64,
    pub sharpness_constant: f64,
    pub sharpness_slope: f64,
    pub scaling_identity: f64,
    pub scaling_flat: f64,
    pub decay_slope: f64,
    pub hausdorff_young: f64,
    pub fefferman_spread: f64,
    pub decay_exponent: f64,
    pub domination: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            oracle: 1e-10,
            growth_spread: 0.20,
            khintchine_low: 0.70,
            khintchine_high: 1.05,
            harmonic_spread: 0.25,
            sharpness_constant: 0.05,
            sharpness_slope: 0.05,
            scaling_identity: 1e-10,
            scaling_flat: 0.10,
            decay_slope: 0.5,
            hausdorff_young: 0.05,
            fefferman_spread: 0.20,
            decay_exponent: 0.1,
            domination: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
}

/// Largest lattice radius accepted before any compute starts.
pub const MAX_LATTICE_RADIUS: usize = 1 << 15;
pub const MAX_MESH: usize = 1024;

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        Self {
            experiment: Experiment { kind, dim: 1 },
            parameters: Parameters::default(),
            tolerances: Tolerances::default(),
            output: Output::default(),
        }
    }

    pub fn kind(&self) -> Kind {
        self.experiment.kind
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Checks every parameter against its admissible range.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.parameters;
        let kind = self.kind();
        if kind.is_randomized() && p.seed.is_none() {
            return Err(invalid("seed", format!("required for the randomized kind '{}'", kind.name())));
        }
        if !(1..=3).contains(&self.experiment.dim) {
            return Err(invalid("dim", format!("{} is outside 1..=3", self.experiment.dim)));
        }
        if let Some([a, b]) = p.n_range {
            if a > b {
                return Err(invalid("n_range", format!("empty range {a}..{b}")));
            }
        }
        if let Some(q) = p.q {
            if !(q >= 1.0 && q.is_finite()) {
                return Err(invalid("q", format!("{q} is not a finite exponent >= 1")));
            }
        }
        if let Some(r) = p.r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid("r", format!("{r} must be positive")));
            }
        }
        if let Some(eps) = p.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(invalid("eps", format!("{eps} must be positive")));
            }
        }
        if let Some(l) = p.lambda_max {
            if l > 12 {
                return Err(invalid("lambda_max", format!("{l} exceeds 12")));
            }
        }
        if let Some([a, b]) = p.k_range {
            if a > b {
                return Err(invalid("k_range", format!("empty range {a}..{b}")));
            }
        }
        if p.trials == Some(0) {
            return Err(invalid("trials", "must be at least 1"));
        }
        if let Some(r) = p.lattice_radius {
            if r == 0 || r > MAX_LATTICE_RADIUS {
                return Err(invalid("lattice_radius", format!("{r} is outside 1..={MAX_LATTICE_RADIUS}")));
            }
        }
        if let Some(m) = p.mesh {
            if m < 8 || m > MAX_MESH || m % 2 != 0 {
                return Err(invalid("mesh", format!("{m} must be even and within 8..={MAX_MESH}")));
            }
        }
        let t = &self.tolerances;
        let all = [
            t.oracle,
            t.growth_spread,
            t.khintchine_low,
            t.khintchine_high,
            t.harmonic_spread,
            t.sharpness_constant,
            t.sharpness_slope,
            t.scaling_identity,
            t.scaling_flat,
            t.decay_slope,
            t.hausdorff_young,
            t.fefferman_spread,
            t.decay_exponent,
            t.domination,
        ];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("tolerances", "every tolerance must be finite and non-negative"));
        }
        Ok(())
    }
}
