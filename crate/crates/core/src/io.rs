//! Comma-separated matrix files.
//!
//! One matrix row per line, no header, `#` comment lines skipped. Values are
//! written with Rust's shortest round-trip formatting, so a write followed by
//! a read reproduces every entry bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, PointSet};

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_matrix_csv(file)
}

/// Parses CSV text from any reader; see [`read_matrix_csv`].
pub fn parse_matrix_csv(input: impl std::io::Read) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut cols = None;
    let mut rows = 0usize;
    let mut data = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {c} fields, found {}", record.len()),
                })
            }
            Some(_) => {}
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("field {} is not a number: {field:?}", j + 1),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("field {} is not finite", j + 1),
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    Ok(DenseMatrix::from_row_major_unchecked(
        rows,
        cols.unwrap_or(0),
        data,
    ))
}

pub fn write_matrix_csv(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    format_matrix_csv(m, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn format_matrix_csv(m: &DenseMatrix, out: &mut impl Write) -> std::io::Result<()> {
    for i in 0..m.rows() {
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{v}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads one point per row and stores them point-contiguously.
pub fn read_points_csv(path: impl AsRef<Path>) -> Result<PointSet> {
    PointSet::from_rows(&read_matrix_csv(path)?)
}

pub fn write_points_csv(points: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_csv(&points.to_rows(), path)
}
