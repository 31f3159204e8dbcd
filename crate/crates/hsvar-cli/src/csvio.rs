//! CSV ingestion and table emission shared by the subcommands.

use std::path::Path;

use hsvar::model::TimeSeriesData;
use hsvar::{Error, Result};
use nalgebra::DMatrix;

use crate::config::DataSection;

/// Reads an observation CSV into a [`TimeSeriesData`] following the column
/// mapping in `section`: named deterministic columns form the deterministic
/// block, the explicit variable list (or every remaining column, in file
/// order) forms the endogenous block.
pub fn read_data(section: &DataSection) -> Result<TimeSeriesData> {
    let path = Path::new(&section.path);
    let mut reader = csv::Reader::from_path(path).map_err(|err| {
        Error::InvalidData(format!("cannot open data CSV {}: {err}", path.display()))
    })?;
    let headers: Vec<String> =
        reader.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();

    let column = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidData(format!(
                "column `{name}` not found in {} (columns: {})",
                path.display(),
                headers.join(", ")
            ))
        })
    };
    let det_indices: Vec<usize> =
        section.deterministic.iter().map(|n| column(n)).collect::<Result<_>>()?;
    let var_names: Vec<String> = match &section.variables {
        Some(names) => {
            for name in names {
                column(name)?;
            }
            names.clone()
        }
        None => headers
            .iter()
            .filter(|h| !section.deterministic.iter().any(|d| d == *h))
            .cloned()
            .collect(),
    };
    if var_names.is_empty() {
        return Err(Error::InvalidData(format!(
            "no endogenous columns left in {} after removing deterministic ones",
            path.display()
        )));
    }
    let var_indices: Vec<usize> = var_names.iter().map(|n| column(n)).collect::<Result<_>>()?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        if record.len() != headers.len() {
            return Err(Error::InvalidData(format!(
                "row {}: {} fields, header has {}",
                idx + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(headers.len());
        for (field, name) in record.iter().zip(&headers) {
            row.push(field.trim().parse::<f64>().map_err(|_| {
                Error::InvalidData(format!(
                    "row {}, column `{name}`: `{field}` is not a number",
                    idx + 1
                ))
            })?);
        }
        rows.push(row);
    }
    let t = rows.len();
    let y = DMatrix::from_fn(t, var_indices.len(), |r, c| rows[r][var_indices[c]]);
    let d = DMatrix::from_fn(t, det_indices.len(), |r, c| rows[r][det_indices[c]]);
    TimeSeriesData::new(y, d, var_names)
}

/// Writes one CSV table: a header record followed by stringified rows.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer.write_record(header).map_err(csv_error)?;
    for row in rows {
        writer.write_record(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(err: csv::Error) -> Error {
    Error::InvalidData(format!("CSV error: {err}"))
}

/// Nested-row view of a matrix, for JSON sidecars and reports.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Rebuilds a matrix from nested rows, validating rectangularity.
pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidData(format!(
            "{what}: expected a non-empty rectangular array of numbers"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
