//! Binary-response CSV input.

use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::logistic::BinaryDataset;

const HEADER: [&str; 2] = ["y", "x"];

fn parse_error(path: &Path, line: u64, column: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        column,
        reason: reason.into(),
    }
}

/// Reads a CSV with header `y,x`, `y ∈ {0, 1}` and a real `x`, keeping row
/// order. With `flip_y` the response is replaced by `1 − y`.
pub fn load_binary_csv(path: &Path, flip_y: bool) -> Result<BinaryDataset> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, 1, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut y = Vec::new();
    let mut x = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, 1, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_error(
                path,
                line,
                record.len().min(2) + 1,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        let yi = match &record[0] {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(parse_error(path, line, 1, format!("y must be 0 or 1, found `{other}`")));
            }
        };
        let xi: f64 = record[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_error(path, line, 2, format!("x is not a finite number: `{}`", &record[1])))?;
        y.push(if flip_y { 1 - yi } else { yi });
        x.push(xi);
    }
    if y.len() < 2 {
        return Err(Error::EmptyData(path.to_path_buf()));
    }
    BinaryDataset::new(y, x)
}
