//! CSV writers for matrices, paths and curves.
//!
//! Numbers are written with 17 significant digits in a locale-independent
//! format so outputs round-trip exactly.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lasso::LassoPath;
use crate::psd::TraceRow;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })
}

/// Writes a matrix as headerless CSV, one row per line.
pub fn write_matrix<W: Write>(m: &DMatrix<f64>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))?;
    }
    flush(w)
}

/// Nonzero coefficients along a path: `lambda,j,beta_j` with 1-based `j`.
pub fn write_path<W: Write>(path: &LassoPath, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lambda", "j", "beta_j"])?;
    for fit in &path.fits {
        for (j, &b) in fit.beta.iter().enumerate() {
            if b != 0.0 {
                w.write_record([fmt_f64(fit.lambda), (j + 1).to_string(), fmt_f64(b)])?;
            }
        }
    }
    flush(w)
}

pub fn write_trace<W: Write>(trace: &[TraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "primal_residual", "dual_residual", "objective"])?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            fmt_f64(r.primal_residual),
            fmt_f64(r.dual_residual),
            fmt_f64(r.objective),
        ])?;
    }
    flush(w)
}

/// Writes a table with a header row.
pub fn write_table<W: Write>(header: &[String], rows: &[Vec<String>], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    flush(w)
}
