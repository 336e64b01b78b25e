//! Plain-text matrix and vector interchange.
//!
//! Matrix files: a header line `n d`, then `n` lines of `d`
//! whitespace-separated floats. Vector files: one float per line.
//! Floats are written with Rust's shortest-roundtrip formatting, so a
//! write/read cycle reproduces every bit and reruns are byte-identical.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Parse and I/O errors, with 1-based line numbers where applicable.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a matrix in the `n d` + rows text format.
///
/// # Errors
///
/// [`IoError::Parse`] with the offending line number on malformed input.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines().enumerate();
    let (header_idx, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected `n d` header"))?;
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .ok_or_else(|| parse_err(path, header_idx + 1, "missing row count"))?
        .parse()
        .map_err(|e| parse_err(path, header_idx + 1, format!("bad row count: {e}")))?;
    let d: usize = parts
        .next()
        .ok_or_else(|| parse_err(path, header_idx + 1, "missing column count"))?
        .parse()
        .map_err(|e| parse_err(path, header_idx + 1, format!("bad column count: {e}")))?;
    if parts.next().is_some() {
        return Err(parse_err(path, header_idx + 1, "trailing tokens after `n d` header"));
    }
    let mut data = Vec::with_capacity(n * d);
    let mut rows_seen = 0usize;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let entries: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let entries =
            entries.map_err(|e| parse_err(path, idx + 1, format!("bad float: {e}")))?;
        if entries.len() != d {
            return Err(parse_err(
                path,
                idx + 1,
                format!("expected {d} entries, got {}", entries.len()),
            ));
        }
        data.extend_from_slice(&entries);
        rows_seen += 1;
    }
    if rows_seen != n {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("header promised {n} rows, found {rows_seen}"),
        ));
    }
    Ok(DMatrix::from_row_slice(n, d, &data))
}

/// Writes a matrix in the `n d` + rows text format.
///
/// # Errors
///
/// [`IoError::Write`] on filesystem failure.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<(), IoError> {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a vector stored one float per line (blank lines ignored).
///
/// # Errors
///
/// [`IoError::Parse`] with the offending line number on malformed input.
pub fn read_vector(path: &Path) -> Result<DVector<f64>, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v: f64 = trimmed
            .parse()
            .map_err(|e| parse_err(path, idx + 1, format!("bad float: {e}")))?;
        values.push(v);
    }
    Ok(DVector::from_vec(values))
}

/// Reads marginals and validates their length against the row count.
///
/// # Errors
///
/// [`IoError::Parse`] when the count does not match `expected_len`.
pub fn read_marginals(path: &Path, expected_len: usize) -> Result<DVector<f64>, IoError> {
    let v = read_vector(path)?;
    if v.len() != expected_len {
        return Err(parse_err(
            path,
            v.len(),
            format!("expected {expected_len} marginals, found {}", v.len()),
        ));
    }
    Ok(v)
}

/// Writes a vector one float per line.
///
/// # Errors
///
/// [`IoError::Write`] on filesystem failure.
pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<(), IoError> {
    let mut out = String::new();
    for x in v.iter() {
        out.push_str(&format!("{x}\n"));
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}
