use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::HarnessError;

/// Top level of an experiment file. Experiment-specific keys live under
/// `[params]` and are checked by the experiment itself.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    #[serde(default)]
    pub n_paths: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub m_orders: Option<Vec<f64>>,
    #[serde(default)]
    pub params: toml::Table,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if cfg.n_paths == Some(0) {
            return Err(HarnessError::Config("n_paths must be positive".into()));
        }
        if let Some(m) = cfg.m_orders.as_ref().and_then(|v| v.iter().find(|&&m| m.is_nan() || m < 1.0)) {
            return Err(HarnessError::Config(format!("moment order {m} is below 1")));
        }
        Ok(cfg)
    }

    /// A config for `experiment` with default parameters.
    pub fn named(experiment: &str, seed: u64) -> Self {
        Self { experiment: experiment.into(), seed, n_paths: None, output_dir: None, m_orders: None, params: toml::Table::new() }
    }

    pub fn params<P: DeserializeOwned>(&self) -> Result<P, HarnessError> {
        toml::Value::Table(self.params.clone())
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("[params] for {}: {e}", self.experiment)))
    }

    pub fn paths_or(&self, default: usize) -> usize {
        self.n_paths.unwrap_or(default)
    }

    pub fn m_or(&self, default: &[f64]) -> Vec<f64> {
        self.m_orders.clone().unwrap_or_else(|| default.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::parse("experiment = \"qv-brownian\"\nseed = 1\ncolour = 3").is_err());
        assert!(ExperimentConfig::parse("experiment = \"qv-brownian\"").is_err());
        let c = ExperimentConfig::parse("experiment = \"qv-brownian\"\nseed = 1\n[params]\nlevel = 6").unwrap();
        assert_eq!(c.params["level"].as_integer(), Some(6));
    }
}
