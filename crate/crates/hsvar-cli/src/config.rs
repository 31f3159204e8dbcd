//! Estimation configuration document.
//!
//! A single JSON file with sections `{data, model, priors, gibbs, outputs}`.
//! The `priors` and `gibbs` sections may be omitted entirely; their defaults
//! reproduce the reference hyperparameters, so a minimal config is just a
//! data path plus the lag order and stationarity flags.

use std::path::Path;

use hsvar::gibbs::GibbsConfig;
use hsvar::model::{ModelConfig, PriorConfig};
use hsvar::{Error, Result};
use serde::{Deserialize, Serialize};

/// Where the observations live and how the CSV columns map to the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// CSV file with a header row and one column per series.
    pub path: String,
    /// Names of deterministic columns (constant, trend, dummies), in the
    /// order they should enter the regressor block.
    #[serde(default)]
    pub deterministic: Vec<String>,
    /// Endogenous columns in model order; defaults to every column not
    /// listed as deterministic, in file order.
    #[serde(default)]
    pub variables: Option<Vec<String>>,
}

/// What the estimation run writes besides the mandatory artifacts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsSection {
    /// Store latent volatility paths in the artifact (large; off by default).
    pub store_h: bool,
}

/// The full configuration document for `hsvar estimate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub data: DataSection,
    pub model: ModelConfig,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default)]
    pub gibbs: GibbsConfig,
    #[serde(default)]
    pub outputs: OutputsSection,
}

/// Keys that have no usable default and must be present in the document.
const REQUIRED_KEYS: [&str; 5] =
    ["data", "data.path", "model", "model.p", "model.stationary_flags"];

fn lookup<'a>(value: &'a serde_json::Value, path: &str) -> Option<&'a serde_json::Value> {
    path.split('.').try_fold(value, |acc, key| acc.get(key))
}

/// Loads and validates a configuration document, naming any missing key by
/// its full path.
pub fn load_estimate_config(path: &Path) -> Result<EstimateConfig> {
    let text = std::fs::read_to_string(path).map_err(|err| {
        Error::InvalidConfig(format!("cannot read config {}: {err}", path.display()))
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    for key in REQUIRED_KEYS {
        if lookup(&value, key).is_none() {
            return Err(Error::InvalidConfig(format!(
                "config key `{key}` is missing in {}",
                path.display()
            )));
        }
    }
    let config: EstimateConfig = serde_json::from_value(value)?;
    config.priors.validate()?;
    config.gibbs.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let path = dir.path().join("config.json");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn minimal_config_gets_all_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            &dir,
            r#"{"data": {"path": "d.csv"}, "model": {"p": 2, "stationary_flags": [true, false]}}"#,
        );
        let cfg = load_estimate_config(&path).unwrap();
        assert_eq!(cfg.model.p, 2);
        assert_eq!(cfg.priors, PriorConfig::default());
        assert_eq!(cfg.gibbs.n_burn, GibbsConfig::default().n_burn);
        assert!(!cfg.outputs.store_h);
        assert!(cfg.data.deterministic.is_empty());
    }

    #[test]
    fn missing_keys_are_named_by_path() {
        let dir = tempfile::tempdir().unwrap();
        for (body, key) in [
            (r#"{"model": {"p": 1, "stationary_flags": [true]}}"#, "data"),
            (r#"{"data": {}, "model": {"p": 1, "stationary_flags": [true]}}"#, "data.path"),
            (r#"{"data": {"path": "d.csv"}}"#, "model"),
            (r#"{"data": {"path": "d.csv"}, "model": {"stationary_flags": []}}"#, "model.p"),
            (
                r#"{"data": {"path": "d.csv"}, "model": {"p": 1}}"#,
                "model.stationary_flags",
            ),
        ] {
            let path = write_config(&dir, body);
            let err = load_estimate_config(&path).unwrap_err();
            let message = err.to_string();
            assert!(
                message.contains(&format!("`{key}`")),
                "expected `{key}` in: {message}"
            );
        }
    }

    #[test]
    fn unknown_sections_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            &dir,
            r#"{"data": {"path": "d.csv"}, "model": {"p": 1, "stationary_flags": [true]},
                "piors": {"s_omega": 0.1}}"#,
        );
        assert!(load_estimate_config(&path).is_err());
    }

    #[test]
    fn partial_priors_merge_with_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(
            &dir,
            r#"{"data": {"path": "d.csv"}, "model": {"p": 1, "stationary_flags": [true]},
                "priors": {"s_omega": 0.2}, "gibbs": {"n_keep": 50}}"#,
        );
        let cfg = load_estimate_config(&path).unwrap();
        assert_eq!(cfg.priors.s_omega, 0.2);
        assert_eq!(cfg.priors.a_omega, PriorConfig::default().a_omega);
        assert_eq!(cfg.gibbs.n_keep, 50);
    }
}
