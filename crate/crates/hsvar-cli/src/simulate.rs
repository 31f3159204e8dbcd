//! `hsvar simulate`: synthetic samples plus a ground-truth sidecar.

use std::path::{Path, PathBuf};

use clap::Args;
use hsvar::simulate::{generate, preset, DgpSpec, SimulationOutput};
use hsvar::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::csvio::{matrix_from_rows, matrix_rows, write_table};

#[derive(Args)]
pub struct SimulateArgs {
    /// Preset process: desk, desk-homoskedastic, or desk-recovery.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    pub preset: Option<String>,
    /// JSON file describing the process (see README for the schema).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Generator seed; the output is a deterministic function of it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output data CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar path; defaults to `<out>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Permit an explosive autoregression.
    #[arg(long)]
    pub allow_unstable: bool,
}

/// JSON schema of a user-supplied process description.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    /// Structural matrix, N rows of N numbers.
    b0: Vec<Vec<f64>>,
    /// Coefficients, N rows of N*p + d numbers.
    a: Vec<Vec<f64>>,
    p: usize,
    t: usize,
    omega: Vec<f64>,
    rho: Vec<f64>,
    #[serde(default)]
    var_names: Option<Vec<String>>,
    /// Include a constant as the single deterministic column.
    #[serde(default = "default_true")]
    constant: bool,
}

fn default_true() -> bool {
    true
}

/// Everything needed to score an estimator against the simulation.
#[derive(Serialize)]
struct TruthSidecar {
    b0: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    p: usize,
    omega: Vec<f64>,
    rho: Vec<f64>,
    seed: u64,
    /// Latent log-volatility paths, rows are times 0..=T.
    h: Vec<Vec<f64>>,
    /// Conditional shock variances, rows are times 0..=T.
    sigma2: Vec<Vec<f64>>,
    /// Structural shocks, rows are times 1..=T.
    shocks: Vec<Vec<f64>>,
}

fn spec_from_document(doc: &SpecDocument, seed: u64, allow_unstable: bool) -> Result<DgpSpec> {
    let b0 = matrix_from_rows(&doc.b0, "spec field `b0`")?;
    let a = matrix_from_rows(&doc.a, "spec field `a`")?;
    let n = b0.nrows();
    let var_names = match &doc.var_names {
        Some(names) => names.clone(),
        None => (1..=n).map(|i| format!("y{i}")).collect(),
    };
    let (det, det_names) = if doc.constant {
        (DMatrix::from_element(doc.t, 1, 1.0), vec!["const".to_string()])
    } else {
        (DMatrix::zeros(doc.t, 0), Vec::new())
    };
    Ok(DgpSpec {
        b0,
        a,
        p: doc.p,
        det,
        det_names,
        var_names,
        omega: doc.omega.clone(),
        rho: doc.rho.clone(),
        t: doc.t,
        seed,
        allow_unstable,
    })
}

fn resolve_spec(args: &SimulateArgs) -> Result<DgpSpec> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(name), None) => preset(name, args.seed)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|err| {
                Error::InvalidConfig(format!("cannot read spec {}: {err}", path.display()))
            })?;
            let doc: SpecDocument = serde_json::from_str(&text)?;
            spec_from_document(&doc, args.seed, args.allow_unstable)?
        }
        _ => unreachable!("clap enforces exactly one of --preset/--spec"),
    };
    spec.allow_unstable = args.allow_unstable;
    Ok(spec)
}

fn write_data_csv(path: &Path, spec: &DgpSpec, sim: &SimulationOutput) -> Result<()> {
    let mut header: Vec<&str> = spec.var_names.iter().map(String::as_str).collect();
    header.extend(spec.det_names.iter().map(String::as_str));
    let n = sim.data.y.ncols();
    let rows: Vec<Vec<String>> = (0..sim.data.y.nrows())
        .map(|t| {
            let mut row: Vec<String> =
                (0..n).map(|j| format!("{}", sim.data.y[(t, j)])).collect();
            row.extend((0..sim.data.d.ncols()).map(|j| format!("{}", sim.data.d[(t, j)])));
            row
        })
        .collect();
    write_table(path, &header, &rows)
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let spec = resolve_spec(args)?;
    let sim = generate(&spec)?;
    write_data_csv(&args.out, &spec, &sim)?;

    let truth_path = args
        .truth
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.truth.json", args.out.display())));
    let sidecar = TruthSidecar {
        b0: matrix_rows(&spec.b0),
        a: matrix_rows(&spec.a),
        p: spec.p,
        omega: spec.omega.clone(),
        rho: spec.rho.clone(),
        seed: spec.seed,
        h: matrix_rows(&sim.h),
        sigma2: matrix_rows(&sim.sigma2),
        shocks: matrix_rows(&sim.w),
    };
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    std::fs::write(&truth_path, text)?;

    println!(
        "wrote {} ({} periods, {} variables) and {}",
        args.out.display(),
        spec.t,
        spec.n(),
        truth_path.display()
    );
    Ok(())
}
