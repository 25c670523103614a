//! CSV and summary emission. Floats are written with Rust's shortest
//! round-trip formatting so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nalgebra::DMatrix;
use qlin_core::entanglement::EntanglementReport;

pub const CSV_HEADER: &str = "t,E_N,sep_min_eig,heisenberg_min_eig,\
p11_11,p11_12,p11_13,p11_14,p11_22,p11_23,p11_24,p11_33,p11_34,p11_44";

/// Drop the sign of negative zero so emitted files stay tidy.
fn plain(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Render a matrix as one bracketed row list per line.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        out.push_str("  [");
        for j in 0..m.ncols() {
            if j > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{}", plain(m[(i, j)]));
        }
        out.push_str("]\n");
    }
    out
}

/// One trajectory sample ready for CSV emission.
pub struct SampleRow<'a> {
    pub t: f64,
    pub report: &'a EntanglementReport,
    pub heisenberg_min_eig: f64,
    pub p11: &'a DMatrix<f64>,
}

/// Write the trajectory CSV: one row per grid sample with the entanglement
/// figures and the ten unique entries of the symmetric quantum block.
pub fn write_trajectory_csv(path: &Path, rows: &[SampleRow<'_>]) -> io::Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{}",
            row.t,
            plain(row.report.log_negativity),
            plain(row.report.sep_min_eig),
            plain(row.heisenberg_min_eig)
        );
        for i in 0..4 {
            for j in i..4 {
                let _ = write!(out, ",{}", plain(row.p11[(i, j)]));
            }
        }
        out.push('\n');
    }
    fs::write(path, out)
}

/// Write a summary document and echo it to stdout.
pub fn emit_summary(path: Option<&Path>, summary: &str) -> io::Result<()> {
    print!("{summary}");
    if let Some(path) = path {
        fs::write(path, summary)?;
    }
    Ok(())
}
