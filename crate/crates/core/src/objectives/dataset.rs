//! Synthetic dataset exchange format: headerless CSV, one example per row,
//! the label (+1 or -1) first and the feature values after it.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Result, ZoqError};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

pub fn write_dataset(path: impl AsRef<Path>, features: &DMatrix<f64>, labels: &[f64]) -> Result<()> {
    if features.nrows() != labels.len() {
        return Err(ZoqError::InvalidArgument(format!(
            "{} rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path.as_ref())?;
    for (i, y) in labels.iter().enumerate() {
        let mut rec = Vec::with_capacity(features.ncols() + 1);
        rec.push(format!("{y}"));
        rec.extend(features.row(i).iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())?;
    let mut labels = Vec::new();
    let mut flat = Vec::new();
    let mut width = None;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                ZoqError::InvalidArgument(format!("line {}: bad number {s:?}: {e}", line + 1))
            })
        };
        let n = rec.len();
        if n < 2 {
            return Err(ZoqError::InvalidArgument(format!(
                "line {}: need a label and at least one feature",
                line + 1
            )));
        }
        match width {
            None => width = Some(n - 1),
            Some(w) if w != n - 1 => {
                return Err(ZoqError::InvalidArgument(format!(
                    "line {}: expected {w} features, found {}",
                    line + 1,
                    n - 1
                )))
            }
            _ => {}
        }
        labels.push(parse(&rec[0])?);
        for field in rec.iter().skip(1) {
            flat.push(parse(field)?);
        }
    }
    let d = width.ok_or_else(|| ZoqError::InvalidArgument("dataset is empty".into()))?;
    Ok(Dataset {
        features: DMatrix::from_row_slice(labels.len(), d, &flat),
        labels,
    })
}
