//! Experiment configuration, read from TOML; every field has a default.
//!
//! ```toml
//! radius = 12.0
//! exponent_multiplier = 1.05
//! samples = 10000
//! seed = 7
//! arcs = 40
//! arc_max_length = 4.0
//! tol_len = 1e-9
//! tol_angle = 1e-9
//! output = "flatflow-out"
//! ```

use crate::Tolerances;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Patch radius R in the cover.
    pub radius: f64,
    /// Series exponent as a multiple of the entropy estimate.
    pub exponent_multiplier: f64,
    pub samples: usize,
    pub seed: u64,
    /// Number of shortest saddle connections used as test arcs.
    pub arcs: usize,
    /// Initial length bound when collecting arcs; doubled until enough.
    pub arc_max_length: f64,
    pub tol_len: f64,
    pub tol_angle: f64,
    pub output: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            radius: 12.0,
            exponent_multiplier: 1.05,
            samples: 10_000,
            seed: 0,
            arcs: 40,
            arc_max_length: 4.0,
            tol_len: 1e-9,
            tol_angle: 1e-9,
            output: "flatflow-out".into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config field `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("exponent multiplier must be at least 1.05, got {0}")]
    MultiplierTooSmall(f64),
}

impl ConfigError {
    pub fn name(&self) -> &'static str {
        match self {
            ConfigError::Syntax(_) => "ConfigSyntax",
            ConfigError::NonPositive(_) => "NonPositiveField",
            ConfigError::MultiplierTooSmall(_) => "MultiplierTooSmall",
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks: [(&'static str, bool); 7] = [
            ("radius", self.radius > 0.0 && self.radius.is_finite()),
            ("exponent_multiplier", self.exponent_multiplier > 0.0),
            ("samples", self.samples > 0),
            ("arcs", self.arcs > 0),
            ("arc_max_length", self.arc_max_length > 0.0),
            ("tol_len", self.tol_len > 0.0),
            ("tol_angle", self.tol_angle > 0.0),
        ];
        if let Some((name, _)) = checks.iter().find(|(_, ok)| !ok) {
            return Err(ConfigError::NonPositive(name));
        }
        if self.exponent_multiplier < 1.05 - 1e-12 {
            return Err(ConfigError::MultiplierTooSmall(self.exponent_multiplier));
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { len: self.tol_len, angle: self.tol_angle }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn bad_fields_are_named() {
        assert_eq!(ExperimentConfig::from_toml("radius = -1.0").unwrap_err(), ConfigError::NonPositive("radius"));
        assert_eq!(ExperimentConfig::from_toml("samples = 0").unwrap_err(), ConfigError::NonPositive("samples"));
        assert!(matches!(ExperimentConfig::from_toml("radius = 1.0\nbogus = 2").unwrap_err(), ConfigError::Syntax(_)));
        assert_eq!(ExperimentConfig::from_toml("exponent_multiplier = 1.0").unwrap_err(), ConfigError::MultiplierTooSmall(1.0));
    }
}
