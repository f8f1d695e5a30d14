//! Labeled datasets on disk.
//!
//! The native format is CSV with a header row `f0,f1,…,f{F-1},label`: one
//! sample per row, real-valued features and a non-negative integer class label
//! in the last column. Values are written with Rust's shortest round-trip float
//! formatting, so write → load reproduces every bit.
//!
//! The UCI HAR layout (`train/X_train.txt`, `train/y_train.txt`, and the same
//! under `test/`) is read as well; its 1-based activity labels are shifted to
//! start at 0.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use feduhd_core::LabeledDataset;

use crate::error::DatasetError;

pub fn load_csv(path: &Path) -> Result<LabeledDataset, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Open { path: path.into(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: u64, reason: String| DatasetError::Parse { path: path.into(), line, reason };

    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.len() < 2 || header.get(header.len() - 1) != Some("label") {
        return Err(parse_err(1, "header must list the feature columns followed by `label`".into()));
    }
    let feature_dim = header.len() - 1;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, field) in record.iter().take(feature_dim).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("column {}: `{field}` is not a number", &header[col])))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {}: non-finite value", &header[col])));
            }
            features.push(v);
        }
        let label = &record[feature_dim];
        labels.push(
            label
                .parse::<usize>()
                .map_err(|_| parse_err(line, format!("label `{label}` is not a non-negative integer")))?,
        );
    }
    if labels.is_empty() {
        return Err(DatasetError::Invalid { path: path.into(), reason: "no data rows".into() });
    }
    LabeledDataset::new(feature_dim, features, labels)
        .map_err(|e| DatasetError::Invalid { path: path.into(), reason: e.to_string() })
}

pub fn write_csv(path: &Path, data: &LabeledDataset) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let f = data.feature_dim();
    for c in 0..f {
        write!(out, "f{c},")?;
    }
    writeln!(out, "label")?;
    for (i, row) in data.rows().enumerate() {
        for v in row {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", data.label(i))?;
    }
    out.flush()
}

/// Loads the `(train, test)` pair from an unpacked UCI HAR directory.
pub fn load_uci_har(dir: &Path) -> Result<(LabeledDataset, LabeledDataset), DatasetError> {
    Ok((load_har_part(dir, "train")?, load_har_part(dir, "test")?))
}

fn load_har_part(dir: &Path, part: &str) -> Result<LabeledDataset, DatasetError> {
    let x_path = dir.join(part).join(format!("X_{part}.txt"));
    let y_path = dir.join(part).join(format!("y_{part}.txt"));

    let mut features = Vec::new();
    let mut feature_dim = None;
    for (n, line) in read_lines(&x_path)? {
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| DatasetError::Parse { path: x_path.clone(), line: n, reason: "malformed feature".into() })?;
        match feature_dim {
            None => feature_dim = Some(row.len()),
            Some(f) if f != row.len() => {
                return Err(DatasetError::Parse {
                    path: x_path,
                    line: n,
                    reason: format!("expected {f} features, found {}", row.len()),
                })
            }
            _ => {}
        }
        features.extend(row);
    }

    let mut labels = Vec::new();
    for (n, line) in read_lines(&y_path)? {
        let label = line
            .trim()
            .parse::<usize>()
            .ok()
            .and_then(|l| l.checked_sub(1))
            .ok_or_else(|| DatasetError::Parse { path: y_path.clone(), line: n, reason: "label must be an integer ≥ 1".into() })?;
        labels.push(label);
    }

    let feature_dim =
        feature_dim.ok_or_else(|| DatasetError::Invalid { path: x_path.clone(), reason: "no data rows".into() })?;
    LabeledDataset::new(feature_dim, features, labels)
        .map_err(|e| DatasetError::Invalid { path: dir.into(), reason: format!("{part}: {e}") })
}

// Non-blank lines with their 1-based line numbers.
fn read_lines(path: &PathBuf) -> Result<Vec<(u64, String)>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Open { path: path.clone(), source })?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Open { path: path.clone(), source })?;
        if !line.trim().is_empty() {
            lines.push((i as u64 + 1, line));
        }
    }
    Ok(lines)
}
