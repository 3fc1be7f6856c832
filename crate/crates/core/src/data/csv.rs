//! Feature CSV ingestion: comma-separated decimals, optional header,
//! optional label column with values 1 (target) / -1 (anomaly).

use std::fs;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::SampleMatrix;

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Zero-based column holding the 1 / -1 class label.
    pub label_col: Option<usize>,
}

/// Loads a feature CSV into a dataset, splitting targets from anomalies
/// when a label column is given. Parse failures name the 1-based line.
pub fn load_features_csv(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_features_csv(&text, opts, &path.display().to_string())
}

fn parse_features_csv(text: &str, opts: &CsvOptions, source: &str) -> Result<Dataset> {
    let mut targets: Vec<Vec<f64>> = Vec::new();
    let mut anomalies: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if opts.has_header && idx == 0 {
            continue;
        }
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {w} columns, found {}", cells.len()),
                })
            }
            _ => {}
        }
        if let Some(col) = opts.label_col {
            if col >= cells.len() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("label column {col} out of range ({} columns)", cells.len()),
                });
            }
        }
        let mut features = Vec::with_capacity(cells.len());
        let mut label = 1.0;
        for (c, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("column {c} is not a number: '{}'", cell.trim()),
            })?;
            if Some(c) == opts.label_col {
                label = value;
            } else {
                features.push(value);
            }
        }
        match (opts.label_col, label) {
            (None, _) => targets.push(features),
            (Some(_), l) if l == 1.0 => targets.push(features),
            (Some(_), l) if l == -1.0 => anomalies.push(features),
            (Some(col), l) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("label column {col} must be 1 or -1, found {l}"),
                })
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::InvalidData(format!(
            "{source}: no target samples (label 1) found"
        )));
    }
    let targets = SampleMatrix::from_rows(&targets)?;
    let anomalies = if anomalies.is_empty() {
        None
    } else {
        Some(SampleMatrix::from_rows(&anomalies)?)
    };
    Dataset::new(targets, anomalies, source)
}
