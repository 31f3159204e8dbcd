//! `hsvar normalize`: resolve sign/permutation ambiguity across stored draws.
//!
//! The benchmark either comes from a file or is the structural matrix of the
//! draw with the highest posterior kernel value ("from-mode").  Normalizing
//! an already-normalized artifact is a no-op byte for byte: the selected
//! transform search enumerates the identity first and accepts strictly
//! better candidates only, and the kernel is invariant under sign flips and
//! relabellings, so a second pass picks the same benchmark and the identity
//! transform for every draw.

use std::path::{Path, PathBuf};

use clap::Args;
use hsvar::artifact::{read_artifact, write_artifact, ArtifactHeader};
use hsvar::gibbs::{log_posterior_kernel, ChainContext};
use hsvar::model::{build_regressors, PosteriorSample};
use hsvar::structural::{best_transform, normalize_draw, NormalizationBenchmark};
use hsvar::{Error, Result};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::config::DataSection;
use crate::csvio::read_data;

#[derive(Args)]
pub struct NormalizeArgs {
    /// Posterior artifact produced by `hsvar estimate`.
    #[arg(long)]
    pub artifact: PathBuf,
    /// Destination artifact.
    #[arg(long)]
    pub out: PathBuf,
    /// Benchmark source: `from-mode` or `from-file`.
    #[arg(long, default_value = "from-mode")]
    pub benchmark: String,
    /// JSON document `{"b0": [[...], ...]}` used with `from-file`.
    #[arg(long)]
    pub benchmark_file: Option<PathBuf>,
    /// Estimation data CSV, needed to evaluate the kernel with `from-mode`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Deterministic column names in the data CSV.
    #[arg(long, value_delimiter = ',')]
    pub deterministic: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkFile {
    b0: Vec<Vec<f64>>,
}

fn benchmark_from_file(path: &Path, n: usize) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let doc: BenchmarkFile = serde_json::from_str(&text)?;
    if doc.b0.len() != n || doc.b0.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension(format!(
            "benchmark in {} is not {n}x{n}",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| doc.b0[i][j]))
}

/// Picks the stored draw with the highest posterior kernel value.  The
/// kernel needs the latent volatility paths, so the artifact must have been
/// written with `--store-h`.
fn benchmark_from_mode(
    args: &NormalizeArgs,
    sample: &PosteriorSample,
    header: &ArtifactHeader,
) -> Result<DMatrix<f64>> {
    if !header.includes_h {
        return Err(Error::InvalidConfig(
            "benchmark `from-mode` needs latent volatility paths; \
             re-run `hsvar estimate` with --store-h"
            .into(),
        ));
    }
    let data_path = args.data.as_ref().ok_or_else(|| {
        Error::InvalidConfig("--data is required with --benchmark from-mode".into())
    })?;
    let data = read_data(&DataSection {
        path: data_path.display().to_string(),
        deterministic: args.deterministic.clone(),
        variables: None,
    })?;
    if data.n() != header.n_vars || data.n_det() != header.n_deterministic() {
        return Err(Error::Dimension(format!(
            "data has {} variables and {} deterministic columns, artifact \
             was estimated with {} and {}",
            data.n(),
            data.n_det(),
            header.n_vars,
            header.n_deterministic()
        )));
    }
    let (yt, x) = build_regressors(&data, &header.model)?;
    if yt.nrows() != header.t_eff {
        return Err(Error::Dimension(format!(
            "data yields {} effective observations, artifact stores {}",
            yt.nrows(),
            header.t_eff
        )));
    }
    let ctx = ChainContext::new(
        &header.model,
        header.priors.clone(),
        header.n_vars,
        header.n_deterministic(),
        false,
        header.gibbs.log_sq_offset,
    )?;

    let mut best = f64::NEG_INFINITY;
    let mut best_b0 = None;
    for draw in &sample.draws {
        let value = log_posterior_kernel(draw, &yt, &x, &ctx)?;
        if best_b0.is_none() || value > best {
            best = value;
            best_b0 = Some(draw.b0.clone());
        }
    }
    best_b0.ok_or_else(|| Error::InvalidData("artifact holds no draws".into()))
}

pub fn run(args: &NormalizeArgs) -> Result<()> {
    let (sample, header) = read_artifact(&args.artifact)?;

    let b0_hat = match args.benchmark.as_str() {
        "from-file" => {
            let path = args.benchmark_file.as_ref().ok_or_else(|| {
                Error::InvalidConfig(
                    "--benchmark-file is required with --benchmark from-file".into(),
                )
            })?;
            benchmark_from_file(path, header.n_vars)?
        }
        "from-mode" => benchmark_from_mode(args, &sample, &header)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown benchmark `{other}`; expected `from-mode` or `from-file`"
            )))
        }
    };
    let bench = NormalizationBenchmark::identity_weighted(b0_hat)?;

    let mut draws = Vec::with_capacity(sample.draws.len());
    let mut sddr_moments = Vec::with_capacity(sample.sddr_moments.len());
    for (draw, moments) in sample.draws.iter().zip(&sample.sddr_moments) {
        let transform = best_transform(&draw.b0, &bench)?;
        // The (mean, variance) records of omega's conditional posterior are
        // equation-indexed, so they follow the row permutation; sign flips
        // leave them unchanged because the volatility layer sees w² only.
        sddr_moments.push(
            transform
                .permutation
                .iter()
                .map(|&j| moments[j])
                .collect::<Vec<_>>(),
        );
        draws.push(normalize_draw(draw, &bench)?);
    }

    let normalized = PosteriorSample {
        draws,
        sddr_moments,
        meta: sample.meta.clone(),
    };
    write_artifact(
        &args.out,
        &normalized,
        &header.model,
        &header.priors,
        &header.gibbs,
        header.includes_h,
    )?;
    println!(
        "normalized {} draws against `{}` benchmark -> {}",
        normalized.draws.len(),
        args.benchmark,
        args.out.display()
    );
    Ok(())
}
