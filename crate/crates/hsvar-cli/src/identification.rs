//! `hsvar check-identification`: point identification from a covariance
//! sequence alone, no estimation involved.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use hsvar::theory::{check_condition, recover_structure};
use hsvar::{Error, Result};
use nalgebra::DMatrix;

use crate::csvio::write_table;

#[derive(Args)]
pub struct CheckArgs {
    /// Long-format covariance CSV with columns `t,i,j,value`:
    /// `t` is the 0-based regime index, `i`/`j` are 1-based positions.
    #[arg(long)]
    pub input: PathBuf,
    /// Optional CSV with columns `column,verdict`; verdicts also print
    /// to stdout either way.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reassembles the `Σ_t` sequence from long-format entries.  Either triangle
/// (or both) may be supplied; conflicting duplicates and missing cells are
/// errors.
fn read_covariances(path: &PathBuf) -> Result<Vec<DMatrix<f64>>> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| {
        Error::InvalidData(format!("cannot open {}: {e}", path.display()))
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?
        .clone();
    let expected = ["t", "i", "j", "value"];
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::InvalidData(format!(
            "{}: expected header `t,i,j,value`, found `{}`",
            path.display(),
            found.join(",")
        )));
    }

    let mut cells: BTreeMap<usize, BTreeMap<(usize, usize), f64>> = BTreeMap::new();
    let mut n = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))?;
        let field = |k: usize| -> Result<f64> {
            record
                .get(k)
                .ok_or_else(|| {
                    Error::InvalidData(format!("row {}: missing field {k}", row_idx + 1))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|_| {
                    Error::InvalidData(format!(
                        "row {}, column `{}`: `{}` is not a number",
                        row_idx + 1,
                        expected[k],
                        record.get(k).unwrap_or("")
                    ))
                })
        };
        let parse_index = |k: usize| -> Result<usize> {
            let v = field(k)?;
            if v.fract() != 0.0 || v < 0.0 {
                return Err(Error::InvalidData(format!(
                    "row {}, column `{}`: `{v}` is not a nonnegative integer",
                    row_idx + 1,
                    expected[k]
                )));
            }
            Ok(v as usize)
        };
        let t = parse_index(0)?;
        let i = parse_index(1)?;
        let j = parse_index(2)?;
        let value = field(3)?;
        if i == 0 || j == 0 {
            return Err(Error::InvalidData(format!(
                "row {}: positions i and j are 1-based",
                row_idx + 1
            )));
        }
        n = n.max(i).max(j);
        let (lo, hi) = (i.min(j) - 1, i.max(j) - 1);
        if let Some(old) = cells.entry(t).or_default().insert((lo, hi), value) {
            if old != value {
                return Err(Error::InvalidData(format!(
                    "row {}: conflicting values {old} and {value} for (t={t}, i={i}, j={j})",
                    row_idx + 1
                )));
            }
        }
    }
    if n == 0 {
        return Err(Error::InvalidData(format!(
            "{} holds no covariance entries",
            path.display()
        )));
    }
    let n_regimes = cells.len();
    if cells.keys().copied().ne(0..n_regimes) {
        return Err(Error::InvalidData(
            "regime indices t must cover 0..K without gaps".into(),
        ));
    }

    let mut sigmas = Vec::with_capacity(n_regimes);
    for (t, entries) in cells {
        let mut sigma = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let value = *entries.get(&(i, j)).ok_or_else(|| {
                    Error::InvalidData(format!(
                        "regime t={t} is missing entry (i={}, j={})",
                        i + 1,
                        j + 1
                    ))
                })?;
                sigma[(i, j)] = value;
                sigma[(j, i)] = value;
            }
        }
        sigmas.push(sigma);
    }
    Ok(sigmas)
}

pub fn run(args: &CheckArgs) -> Result<()> {
    let sigmas = read_covariances(&args.input)?;
    let (_, seq) = recover_structure(&sigmas)?;

    let n = sigmas[0].nrows();
    let mut rows = Vec::with_capacity(n);
    for column in 0..n {
        let verdict = if check_condition(&seq, column) {
            "identified"
        } else {
            "ambiguous"
        };
        println!("column {}: {verdict}", column + 1);
        rows.push(vec![(column + 1).to_string(), verdict.to_string()]);
    }
    if let Some(path) = &args.out {
        write_table(path, &["column", "verdict"], &rows)?;
    }
    Ok(())
}
