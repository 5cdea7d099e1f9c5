//! Run configuration: one JSON document.
//!
//! ```json
//! {
//!   "dispersion": {"kind": "linear", "params": [1.7, -0.02],
//!                  "pump_index": 1.666, "validity": [0.02, 1.98]},
//!   "crystal": {"length": 64.0, "g": 0.02},
//!   "grid": {"omega_min": 0.2, "omega_max": 0.8, "n": 61},
//!   "method": "exact",
//!   "ode_steps": 4096,
//!   "montecarlo": {"seed": 20240611, "shots": 100000},
//!   "output": {"path": "out", "format": "csv"}
//! }
//! ```
//!
//! `method`, `ode_steps`, `montecarlo` and `output` are optional.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::{CrystalConfig, Method, DEFAULT_ODE_STEPS, MIN_ODE_STEPS};
use crate::dispersion::DispersionModel;

/// The shipped reference configuration.
pub const REFERENCE_JSON: &str = include_str!("../reference.json");

pub const DEFAULT_SHOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dispersion: DispersionModel,
    pub crystal: CrystalConfig,
    pub grid: GridSpec,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default = "default_ode_steps")]
    pub ode_steps: usize,
    #[serde(default)]
    pub montecarlo: Option<MonteCarloSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub seed: Option<u64>,
    pub shots: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_path")]
    pub path: String,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            path: default_out_path(),
            format: OutputFormat::Csv,
        }
    }
}

fn default_method() -> String {
    "exact".into()
}

fn default_ode_steps() -> usize {
    DEFAULT_ODE_STEPS
}

fn default_out_path() -> String {
    "out".into()
}

/// Config problem tied to the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() || self.key == "." {
            write!(f, "invalid config: {}", self.message)
        } else {
            write!(f, "invalid config at `{}`: {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
            key: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn reference() -> Self {
        Self::from_json(REFERENCE_JSON).expect("shipped reference.json is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let GridSpec {
            omega_min,
            omega_max,
            n,
        } = self.grid;
        if n == 0 {
            return Err(invalid("grid.n", "must be >= 1"));
        }
        if !(omega_min > 0.0 && omega_min < 1.0) {
            return Err(invalid("grid.omega_min", "must lie in (0, 1)"));
        }
        if !(omega_max > 0.0 && omega_max < 1.0) {
            return Err(invalid("grid.omega_max", "must lie in (0, 1)"));
        }
        if n > 1 && !(omega_min < omega_max) {
            return Err(invalid(
                "grid.omega_max",
                "must exceed grid.omega_min when n > 1",
            ));
        }
        if self.ode_steps < MIN_ODE_STEPS {
            return Err(invalid("ode_steps", format!("must be >= {MIN_ODE_STEPS}")));
        }
        Method::parse(&self.method, self.ode_steps)
            .map_err(|e| invalid("method", e.to_string()))?;
        if let Some(MonteCarloSpec {
            shots: Some(shots), ..
        }) = self.montecarlo
        {
            if shots < crate::ensemble::MIN_SHOTS {
                return Err(invalid(
                    "montecarlo.shots",
                    format!("must be >= {}", crate::ensemble::MIN_SHOTS),
                ));
            }
        }
        Ok(())
    }

    pub fn method(&self) -> Method {
        Method::parse(&self.method, self.ode_steps).expect("validated at load")
    }

    /// Uniform grid `omega_min ..= omega_max` with `n` points.
    pub fn omega_grid(&self) -> Vec<f64> {
        let GridSpec {
            omega_min: lo,
            omega_max: hi,
            n,
        } = self.grid;
        if n == 1 {
            return vec![lo];
        }
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    /// SHA-256 of the canonical JSON serialization. The output directory is
    /// left out so identical runs written to different places match.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.path.clear();
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
