//! Matrix Market matrices and one-value-per-line vectors.
//!
//! Values are written with 17 significant digits, which reproduces every
//! `f64` exactly on reading.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes coordinate format, one-based, column-major order.
pub fn write_matrix_market(path: &Path, x: &SparseMatrix) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", x.n_rows(), x.n_cols(), x.nnz())?;
    for j in 0..x.n_cols() {
        let (idx, val) = x.col(j);
        for (&i, &v) in idx.iter().zip(val) {
            writeln!(w, "{} {} {}", i + 1, j + 1, fmt(v))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: expected a number")))
}

/// Reads `coordinate` or `array` format with `real` or `integer` values and
/// `general` or `symmetric` structure.
pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty Matrix Market file".into()))?;
    let h: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if h.len() != 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" {
        return Err(Error::Parse(format!("unrecognized header: {header}")));
    }
    let coordinate = match h[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(Error::Parse(format!("unsupported format {other}"))),
    };
    if h[3] != "real" && h[3] != "integer" {
        return Err(Error::Parse(format!("unsupported field {}", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'));
    let (ln, size) = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let mut tok = size.split_whitespace();
    let rows: usize = parse_num(tok.next(), ln + 1)?;
    let cols: usize = parse_num(tok.next(), ln + 1)?;
    let mut triplets = Vec::new();
    if coordinate {
        let nnz: usize = parse_num(tok.next(), ln + 1)?;
        for (ln, line) in body.by_ref().take(nnz) {
            let mut t = line.split_whitespace();
            let i: usize = parse_num(t.next(), ln + 1)?;
            let j: usize = parse_num(t.next(), ln + 1)?;
            let v: f64 = parse_num(t.next(), ln + 1)?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(Error::Parse(format!("line {}: entry ({i}, {j}) out of range", ln + 1)));
            }
            triplets.push((i - 1, j - 1, v));
            if symmetric && i != j {
                triplets.push((j - 1, i - 1, v));
            }
        }
        if triplets.len() < nnz {
            return Err(Error::Parse(format!("expected {nnz} entries")));
        }
    } else {
        let values: Vec<f64> = body
            .map(|(ln, l)| parse_num(Some(l.trim()), ln + 1))
            .collect::<Result<_>>()?;
        let mut it = values.into_iter();
        for j in 0..cols {
            let start = if symmetric { j } else { 0 };
            for i in start..rows {
                let v = it.next().ok_or_else(|| Error::Parse("too few array entries".into()))?;
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
    }
    if triplets.iter().any(|t| !t.2.is_finite()) {
        return Err(Error::NonFinite("matrix entries"));
    }
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for &a in v {
        writeln!(w, "{}", fmt(a))?;
    }
    w.flush()?;
    Ok(())
}

/// One value per line; blank lines are skipped.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(ln, l)| {
            let v: f64 = parse_num(Some(l.trim()), ln + 1)?;
            if v.is_finite() { Ok(v) } else { Err(Error::NonFinite("vector entry")) }
        })
        .collect()
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&fs::read_to_string(path)?)
}
