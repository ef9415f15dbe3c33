//! File formats: binary vectors, JSON reports, TOML/JSON configs and CSV
//! matrices.
//!
//! Binary vector layout: a u64 little-endian entry count followed by the
//! entries as f64 little-endian. Everything else is text.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_vector_binary(path: &Path, v: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(8 + 8 * v.len());
    buf.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for x in v {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn read_vector_binary(path: &Path) -> Result<Vec<f64>> {
    let buf = fs::read(path)?;
    if buf.len() < 8 {
        return Err(Error::Config(format!(
            "{}: truncated vector header",
            path.display()
        )));
    }
    let len = u64::from_le_bytes(buf[..8].try_into().expect("8 bytes")) as usize;
    if buf.len() != 8 + 8 * len {
        return Err(Error::Config(format!(
            "{}: expected {} payload bytes, found {}",
            path.display(),
            8 * len,
            buf.len() - 8
        )));
    }
    Ok(buf[8..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Deserializes a config by file extension: `.toml` or `.json`.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
        Some("json") => Ok(serde_json::from_str(&text)?),
        other => Err(Error::Config(format!(
            "{}: unsupported config extension {:?} (use .toml or .json)",
            path.display(),
            other.unwrap_or("none")
        ))),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Reads a dense matrix from headerless CSV: one row per line, entries
/// comma-separated. Rows must agree in length.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect();
        let row = row.map_err(|e| {
            Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Config(format!(
                    "{}:{}: row has {} entries, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{}: empty matrix", path.display())));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{}", a[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
