//! `hsvar estimate`: run chains and persist artifacts, moments, manifests.

use std::path::PathBuf;

use clap::Args;
use hsvar::artifact::{write_artifact, write_moments_csv};
use hsvar::gibbs::run_chain;
use hsvar::{Error, Result};

use crate::config::load_estimate_config;
use crate::csvio::read_data;
use crate::manifest::{config_digest, unix_now, RunManifest};

#[derive(Args)]
pub struct EstimateArgs {
    /// Configuration document; see README for the schema.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the data path in the config.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Directory receiving artifacts, moment files, and manifests.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Number of chains; chain `i` runs with seed `base + i`.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Override the base seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Store latent volatility paths in the artifacts.
    #[arg(long)]
    pub store_h: bool,
}

pub fn run(args: &EstimateArgs) -> Result<()> {
    if args.chains == 0 {
        return Err(Error::InvalidConfig("--chains must be at least 1".into()));
    }
    let mut config = load_estimate_config(&args.config)?;
    if let Some(path) = &args.data {
        config.data.path = path.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.gibbs.seed = seed;
    }
    if args.store_h {
        config.outputs.store_h = true;
    }

    let data = read_data(&config.data)?;
    config.model.validate(data.y.ncols())?;
    std::fs::create_dir_all(&args.out_dir)?;

    let base_seed = config.gibbs.seed;
    for chain in 0..args.chains {
        let created_unix = unix_now();
        let mut chain_config = config.clone();
        chain_config.gibbs.seed = base_seed + chain as u64;
        chain_config.gibbs.chain_id = chain;

        let sample =
            run_chain(&data, &chain_config.model, &chain_config.priors, &chain_config.gibbs)?;

        let artifact_path = args.out_dir.join(format!("posterior_chain{chain}.bin"));
        let moments_path = args.out_dir.join(format!("moments_chain{chain}.csv"));
        write_artifact(
            &artifact_path,
            &sample,
            &chain_config.model,
            &chain_config.priors,
            &chain_config.gibbs,
            chain_config.outputs.store_h,
        )?;
        write_moments_csv(&moments_path, &sample)?;

        let manifest = RunManifest {
            config_digest: config_digest(&chain_config)?,
            base_seed,
            chain_seed: chain_config.gibbs.seed,
            chain_id: chain,
            n_chains: args.chains,
            seed_derivation: "base seed plus chain index".to_string(),
            created_unix,
            finished_unix: unix_now(),
            artifact_path: artifact_path.display().to_string(),
            moments_path: moments_path.display().to_string(),
            config: chain_config,
        };
        manifest.write(&args.out_dir.join(format!("manifest_chain{chain}.json")))?;

        println!(
            "chain {chain}: {} kept draws (seed {}) -> {}",
            sample.draws.len(),
            manifest.chain_seed,
            artifact_path.display()
        );
    }
    Ok(())
}
