//! JSON simulation configuration.
//!
//! ```json
//! {
//!   "master_seed": 1,
//!   "reps": 100,
//!   "alpha": 0.05,
//!   "methods": ["ordershape", "bh", "st"],
//!   "scenarios": [{"m": 10000, "informativeness": "high", "density_target": 0.1, "ks": 2.5}],
//!   "grid": {"m": 10000, "informativeness": ["weak", "moderate", "high"],
//!            "density_targets": [0.05, 0.1, 0.2], "ks": [2, 2.5, 3]}
//! }
//! ```
//!
//! Explicit `scenarios` come first, then the grid's Cartesian product in
//! informativeness → density → ks order. Grid cells get seeds `1, 2, …`
//! offset by `seed`.

use std::path::Path;

use ordershape::simulate::{
    Alternative, Dependence, Informativeness, ScenarioConfig, SimulateError, Variant,
};
use ordershape::Method;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("scenario {index}: {source}")]
    Scenario { index: usize, source: SimulateError },
}

/// Cartesian product of informativeness, density and effect size, sharing
/// every other scenario field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub m: usize,
    pub informativeness: Vec<Informativeness>,
    pub density_targets: Vec<f64>,
    pub ks: Vec<f64>,
    #[serde(default)]
    pub alternative: Alternative,
    #[serde(default)]
    pub dependence: Dependence,
    #[serde(default)]
    pub covariate_noise: f64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
}

impl GridSpec {
    pub fn expand(&self) -> Vec<ScenarioConfig> {
        let mut out = Vec::new();
        for &informativeness in &self.informativeness {
            for &density_target in &self.density_targets {
                for &ks in &self.ks {
                    out.push(ScenarioConfig {
                        m: self.m,
                        informativeness,
                        density_target,
                        ks,
                        alternative: self.alternative,
                        dependence: self.dependence,
                        covariate_noise: self.covariate_noise,
                        variant: self.variant,
                        seed: self.seed + out.len() as u64 + 1,
                    });
                }
            }
        }
        out
    }
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub master_seed: u64,
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: SimulationConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Explicit scenarios followed by the expanded grid.
    pub fn all_scenarios(&self) -> Vec<ScenarioConfig> {
        let mut out = self.scenarios.clone();
        if let Some(grid) = &self.grid {
            out.extend(grid.expand());
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field, reason: &str| ConfigError::Invalid {
            field,
            reason: reason.to_string(),
        };
        if self.reps == 0 {
            return Err(invalid("reps", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is required"));
        }
        let scenarios = self.all_scenarios();
        if scenarios.is_empty() {
            return Err(invalid("scenarios", "no scenarios or grid given"));
        }
        for (index, s) in scenarios.iter().enumerate() {
            s.validate()
                .map_err(|source| ConfigError::Scenario { index, source })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAIN: &str = r#"{
        "master_seed": 3, "reps": 100, "methods": ["ordershape", "bh"],
        "grid": {"m": 10000, "informativeness": ["weak", "moderate", "high"],
                 "density_targets": [0.05, 0.1, 0.2], "ks": [2, 2.5, 3]}
    }"#;

    #[test]
    fn grid_expands_to_27() {
        let c = SimulationConfig::from_json(MAIN).unwrap();
        let s = c.all_scenarios();
        assert_eq!(s.len(), 27);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(s[0].seed, 1);
        assert_eq!(s[26].seed, 27);
        assert_eq!(s[26].informativeness, Informativeness::High);
        assert_eq!((s[1].density_target, s[1].ks), (0.05, 2.5));
    }

    #[test]
    fn invalid_density_names_field() {
        let text = r#"{"reps": 2, "methods": ["bh"],
            "scenarios": [{"m": 100, "informativeness": "weak", "density_target": 1.5, "ks": 2}]}"#;
        let err = SimulationConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("density_target"), "{err}");
    }

    #[test]
    fn rejects_bad_top_level() {
        assert!(SimulationConfig::from_json(r#"{"reps": 0, "methods": ["bh"]}"#).is_err());
        assert!(SimulationConfig::from_json(r#"{"reps": 1, "methods": ["nope"]}"#).is_err());
        assert!(SimulationConfig::from_json(r#"{"reps": 1, "methods": ["bh"]}"#).is_err());
    }
}
