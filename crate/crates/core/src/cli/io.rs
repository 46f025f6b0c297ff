use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::tla::{rank_standardize_matrix, StandardizedMatrix};
use crate::{Error, Result};

/// Smallest sample accepted from a file.
pub const MIN_ROWS: usize = 10;

/// Reads a rectangular numeric CSV.
///
/// With `standardize` every column is rank-transformed to Pareto(1, 2);
/// otherwise entries must already be positive.
pub fn ingest_csv(path: &Path, has_header: bool, standardize: bool) -> Result<StandardizedMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_csv(&text, has_header, standardize)
}

pub fn parse_csv(text: &str, has_header: bool, standardize: bool) -> Result<StandardizedMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse(format!("line {line}: expected {w} fields, found {}", record.len())));
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}, column {}: not a number: {cell:?}", col + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("line {line}, column {}: non-finite value", col + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    let p = width.unwrap_or(0);
    if rows < MIN_ROWS || p == 0 {
        return Err(Error::InvalidParameter(format!("need at least {MIN_ROWS} rows and one column, got {rows}×{p}")));
    }
    let data = DMatrix::from_row_slice(rows, p, &values);
    if standardize {
        rank_standardize_matrix(&data)
    } else {
        StandardizedMatrix::new(data, false)
    }
}

/// Fixed 17-significant-digit scientific notation; round-trips every `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per sample, values in [`format_f64`] notation.
pub fn to_csv_string(data: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(data.nrows() * data.ncols() * 24);
    for l in 0..data.nrows() {
        for j in 0..data.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_f64(data[(l, j)]));
        }
        out.push('\n');
    }
    out
}
