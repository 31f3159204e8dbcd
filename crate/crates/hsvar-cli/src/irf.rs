//! `hsvar irf`: posterior impulse-response summaries.

use std::path::PathBuf;

use clap::Args;
use hsvar::artifact::read_artifact;
use hsvar::structural::{compute_irf, rescale_irf};
use hsvar::{Error, Result};

use crate::csvio::write_table;

#[derive(Args)]
pub struct IrfArgs {
    /// Posterior artifact produced by `hsvar estimate`.
    #[arg(long)]
    pub artifact: PathBuf,
    /// Response horizon; 0 reports the impact period only.
    #[arg(long)]
    pub horizon: usize,
    /// Destination CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Rescale each draw so `shock:variable` hits `target` on impact
    /// (for example `1:2:0.25`; shock and variable are 1-based).
    #[arg(long)]
    pub rescale: Option<String>,
    /// Posterior quantiles reported alongside the mean.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.16, 0.5, 0.84, 0.95])]
    pub quantiles: Vec<f64>,
}

fn parse_rescale(raw: &str) -> Result<(usize, usize, f64)> {
    let parts: Vec<&str> = raw.split(':').collect();
    let bad = || {
        Error::InvalidConfig(format!(
            "--rescale expects shock:variable:target (got `{raw}`)"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let shock: usize = parts[0].parse().map_err(|_| bad())?;
    let variable: usize = parts[1].parse().map_err(|_| bad())?;
    let target: f64 = parts[2].parse().map_err(|_| bad())?;
    if shock == 0 || variable == 0 {
        return Err(Error::InvalidConfig(
            "--rescale shock and variable indices are 1-based".into(),
        ));
    }
    Ok((shock - 1, variable - 1, target))
}

/// Type-7 sample quantile: linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn run(args: &IrfArgs) -> Result<()> {
    let (sample, header) = read_artifact(&args.artifact)?;
    for q in &args.quantiles {
        if !(0.0..=1.0).contains(q) {
            return Err(Error::InvalidConfig(format!(
                "quantile {q} is outside [0, 1]"
            )));
        }
    }
    let rescale = args.rescale.as_deref().map(parse_rescale).transpose()?;

    let n = header.n_vars;
    let p = header.model.p;
    let n_draws = sample.draws.len();

    // responses[h][shock][variable] collects one value per draw.
    let n_h = args.horizon + 1;
    let mut responses = vec![vec![vec![Vec::with_capacity(n_draws); n]; n]; n_h];
    for draw in &sample.draws {
        let mut irf = compute_irf(draw, p, args.horizon)?;
        if let Some((shock, variable, target)) = rescale {
            irf = rescale_irf(&irf, shock, variable, target)?;
        }
        for (h, theta) in irf.theta.iter().enumerate() {
            for shock in 0..n {
                for variable in 0..n {
                    responses[h][shock][variable].push(theta[(variable, shock)]);
                }
            }
        }
    }

    let mut columns: Vec<String> = vec![
        "horizon".to_string(),
        "shock".to_string(),
        "variable".to_string(),
        "mean".to_string(),
    ];
    columns.extend(args.quantiles.iter().map(|q| format!("q{q}")));
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();

    let mut rows = Vec::with_capacity(n_h * n * n);
    for (h, by_shock) in responses.iter_mut().enumerate() {
        for (shock, by_variable) in by_shock.iter_mut().enumerate() {
            for (variable, values) in by_variable.iter_mut().enumerate() {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                values.sort_by(|a, b| a.total_cmp(b));
                let mut row = vec![
                    h.to_string(),
                    (shock + 1).to_string(),
                    (variable + 1).to_string(),
                    format!("{mean}"),
                ];
                row.extend(args.quantiles.iter().map(|q| format!("{}", quantile(values, *q))));
                rows.push(row);
            }
        }
    }

    write_table(&args.out, &column_refs, &rows)
}
