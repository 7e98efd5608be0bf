//! Header-less CSV files: one sample per row, labels in a single column.

use std::path::Path;

use crate::error::{Error, Result};

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?)
}

pub fn load_samples(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, record) in reader(path.as_ref())?.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidInput(format!("row {}: not a number: {s:?}", i + 1))))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if first != row.len() {
                return Err(Error::InvalidInput(format!("row {} has {} columns, expected {first}", i + 1, row.len())));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Integer labels; values such as `3.0` are accepted.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    let mut labels = Vec::new();
    for (i, record) in reader(path.as_ref())?.records().enumerate() {
        let record = record?;
        if record.len() != 1 {
            return Err(Error::InvalidInput(format!("label row {} has {} columns", i + 1, record.len())));
        }
        let field = &record[0];
        let label = match field.parse::<i64>() {
            Ok(v) => v,
            Err(_) => {
                let v: f64 = field.parse().map_err(|_| Error::InvalidInput(format!("label row {}: {field:?}", i + 1)))?;
                if v.fract() != 0.0 || !v.is_finite() {
                    return Err(Error::InvalidInput(format!("label row {} is not an integer: {field}", i + 1)));
                }
                v as i64
            }
        };
        labels.push(label);
    }
    Ok(labels)
}

pub fn write_rows(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
