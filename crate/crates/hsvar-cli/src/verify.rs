//! `hsvar verify`: Savage-Dickey ratios for the homoskedasticity restriction.

use std::path::PathBuf;

use clap::Args;
use hsvar::artifact::read_artifact;
use hsvar::sddr::{compute_sddr, evidence_category};
use hsvar::Result;

use crate::csvio::write_table;

#[derive(Args)]
pub struct VerifyArgs {
    /// Posterior artifact produced by `hsvar estimate`.
    #[arg(long)]
    pub artifact: PathBuf,
    /// Destination CSV; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &VerifyArgs) -> Result<()> {
    let (sample, header) = read_artifact(&args.artifact)?;

    let mut rows = Vec::with_capacity(header.n_vars);
    for eq in 0..header.n_vars {
        let sddr = compute_sddr(&sample, eq, &header.priors)?;
        rows.push(vec![
            (eq + 1).to_string(),
            format!("{}", sddr.log_sddr),
            format!("{}", sddr.nse),
            evidence_category(sddr.log_sddr).to_string(),
        ]);
    }

    let columns = ["equation", "log_sddr", "nse", "category"];
    match &args.out {
        Some(path) => write_table(path, &columns, &rows)?,
        None => {
            println!("{}", columns.join(","));
            for row in rows {
                println!("{}", row.join(","));
            }
        }
    }
    Ok(())
}
