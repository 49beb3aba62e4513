//! Plain-text matrix and vector files.
//!
//! A matrix file starts with a `rows,cols` line followed by `rows` lines of
//! `cols` comma-separated values. A vector is a matrix with one row or one
//! column. Blank lines and lines starting with `#` are ignored.

use std::fs;
use std::path::Path;

use l1l2_core::linalg::DenseMatrix;

use crate::error::{Error, Result};
use crate::fmt::sig;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let dims: Vec<&str> = header.split(',').map(str::trim).collect();
    if dims.len() != 2 {
        return Err(parse_err(path, hl, "header must be `rows,cols`"));
    }
    let rows: usize = dims[0]
        .parse()
        .map_err(|_| parse_err(path, hl, "bad row count"))?;
    let cols: usize = dims[1]
        .parse()
        .map_err(|_| parse_err(path, hl, "bad column count"))?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, line) in lines {
        if seen == rows {
            return Err(parse_err(path, ln, "more rows than declared"));
        }
        let before = data.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| parse_err(path, ln, format!("not a number: `{}`", tok.trim())))?;
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(parse_err(
                path,
                ln,
                format!("expected {cols} values, found {}", data.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(parse_err(path, 0, format!("expected {rows} rows, found {seen}")));
    }
    Ok(DenseMatrix::from_row_major(rows, cols, data)?)
}

pub fn render_matrix(a: &DenseMatrix) -> String {
    let mut s = format!("{},{}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let row: Vec<String> = a.row(i).iter().map(|v| sig(*v, 17)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_matrix(a)).map_err(|e| Error::io(path, e))
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let m = read_matrix(path)?;
    if m.rows() != 1 && m.cols() != 1 {
        return Err(parse_err(path, 1, "a vector needs one row or one column"));
    }
    Ok(m.into_row_major())
}

/// Writes `v` as an `n x 1` matrix.
pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let m = DenseMatrix::from_row_major(v.len(), 1, v.to_vec())?;
    write_matrix(path, &m)
}

/// Parses `1,2.5,-3` into numbers.
pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| format!("not a number: `{t}`"))
        })
        .collect()
}
