use std::path::Path;

use super::{Dataset, Provenance, Row};
use crate::{Error, Result};

/// Reads a comma-separated file with a header row.
///
/// Every column except `label_column` must parse as a finite real. The label
/// is 1 iff the cell equals `positive_label` exactly. Row numbers in errors
/// count data rows from 1 (the header is not counted).
pub fn load_csv(path: &Path, label_column: &str, positive_label: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Input(format!("{}: {other:?}", path.display())),
        })?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Input(format!("{}: file has no header", path.display())));
    }
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Input(format!("{}: missing label column `{label_column}`", path.display())))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = r + 1;
        let mut features = Vec::with_capacity(feature_names.len());
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let cell_err = |message: String| Error::Cell {
                path: path.to_owned(),
                row: row_no,
                column: headers[i].clone(),
                message,
            };
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| cell_err(format!("cannot parse `{cell}` as a number")))?;
            if !v.is_finite() {
                return Err(cell_err(format!("non-finite value `{cell}`")));
            }
            features.push(v);
        }
        let label = u8::from(record.get(label_idx).map(str::trim) == Some(positive_label));
        rows.push(Row { features, label });
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("{}: no data rows", path.display())));
    }
    Dataset::new(feature_names, rows, Provenance::Csv(path.to_owned()))
}

/// Writes features followed by a 0/1 `label` column.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Input(format!("{other:?}")),
    })?;
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for row in dataset.rows() {
        let mut rec: Vec<String> = row.features.iter().map(|v| v.to_string()).collect();
        rec.push(row.label.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
