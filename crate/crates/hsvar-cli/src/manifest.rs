//! Run manifest: the provenance record written next to every artifact.

use std::path::Path;

use hsvar::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::EstimateConfig;

/// Provenance of one chain's artifact.
///
/// `config` is the fully resolved configuration the chain actually ran with
/// (including its derived seed and chain id), and `config_digest` is the
/// SHA-256 of that configuration serialized exactly as embedded here, so the
/// digest can be recomputed and checked bit-for-bit. Timestamps live here
/// rather than in the artifact, keeping artifact bytes a pure function of
/// the draws and the configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 hex digest of `config` in compact JSON form.
    pub config_digest: String,
    /// Seed supplied on the command line or in the config document.
    pub base_seed: u64,
    /// Seed this chain ran with.
    pub chain_seed: u64,
    /// Index of this chain within the run.
    pub chain_id: usize,
    /// Number of chains in the run.
    pub n_chains: usize,
    /// How `chain_seed` follows from `base_seed`.
    pub seed_derivation: String,
    /// Unix time the chain started.
    pub created_unix: u64,
    /// Unix time the artifact was fully written.
    pub finished_unix: u64,
    /// Posterior artifact written by this chain.
    pub artifact_path: String,
    /// Omega-moment CSV written by this chain.
    pub moments_path: String,
    /// Resolved configuration of this chain.
    pub config: EstimateConfig,
}

/// Hex SHA-256 of the compact JSON serialization of a configuration.
pub fn config_digest(config: &EstimateConfig) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Seconds since the Unix epoch.
pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DataSection, OutputsSection};
    use hsvar::gibbs::GibbsConfig;
    use hsvar::model::{ModelConfig, PriorConfig};

    #[test]
    fn digest_is_stable_and_seed_sensitive() {
        let mut config = EstimateConfig {
            data: DataSection {
                path: "d.csv".into(),
                deterministic: vec!["const".into()],
                variables: None,
            },
            model: ModelConfig { p: 1, stationary_flags: vec![true] },
            priors: PriorConfig::default(),
            gibbs: GibbsConfig::default(),
            outputs: OutputsSection::default(),
        };
        let first = config_digest(&config).unwrap();
        assert_eq!(first.len(), 64);
        assert_eq!(first, config_digest(&config).unwrap());
        config.gibbs.seed += 1;
        assert_ne!(first, config_digest(&config).unwrap());
    }
}
