//! Convergence tables, VTK fields and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mesh::ElementId;
use crate::problem::DpgSolution;

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub step: usize,
    pub p: usize,
    pub h_max: f64,
    pub dofs: usize,
    pub rel_h1_error: Option<f64>,
    pub global_residual: f64,
    pub qoi: Option<C64>,
}

impl ConvergenceRecord {
    pub fn from_solution(step: usize, sol: &DpgSolution) -> Self {
        Self {
            step,
            p: sol.order(),
            h_max: sol.mesh.h_max(),
            dofs: sol.n_free(),
            rel_h1_error: None,
            global_residual: sol.global_residual,
            qoi: None,
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "step",
    "p",
    "h_max",
    "dofs",
    "rel_h1_error",
    "global_residual",
    "qoi_re",
    "qoi_im",
    "qoi_abs",
];

// `{:.16e}` keeps 17 significant digits, enough to round-trip any f64.
fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn convergence_csv(records: &[ConvergenceRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in records {
        let q = r.qoi.unwrap_or(C64::new(f64::NAN, f64::NAN));
        let abs = r.qoi.map_or(f64::NAN, |q| q.norm());
        w.write_record([
            r.step.to_string(),
            r.p.to_string(),
            num(r.h_max),
            r.dofs.to_string(),
            num(r.rel_h1_error.unwrap_or(f64::NAN)),
            num(r.global_residual),
            num(q.re),
            num(q.im),
            num(abs),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[derive(Deserialize)]
struct CsvRow {
    step: usize,
    p: usize,
    h_max: f64,
    dofs: usize,
    rel_h1_error: f64,
    global_residual: f64,
    qoi_re: f64,
    qoi_im: f64,
}

pub fn parse_convergence_csv(text: &str) -> Result<Vec<ConvergenceRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Config(format!("convergence table: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config("convergence table: unexpected header".into()));
    }
    reader
        .deserialize::<CsvRow>()
        .map(|row| {
            let r = row.map_err(|e| Error::Config(format!("convergence table: {e}")))?;
            let both_nan = r.qoi_re.is_nan() && r.qoi_im.is_nan();
            Ok(ConvergenceRecord {
                step: r.step,
                p: r.p,
                h_max: r.h_max,
                dofs: r.dofs,
                rel_h1_error: (!r.rel_h1_error.is_nan()).then_some(r.rel_h1_error),
                global_residual: r.global_residual,
                qoi: (!both_nan).then_some(C64::new(r.qoi_re, r.qoi_im)),
            })
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_convergence_csv(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    write_file(path, &convergence_csv(records))
}

/// Legacy ASCII structured grid over the mesh vertices. Point data carry the
/// real part, imaginary part and modulus of each displacement component; cell
/// data carry, per component, the largest traction modulus over the
/// element's faces.
pub fn vtk_string(sol: &DpgSolution, title: &str) -> String {
    let mesh = &sol.mesh;
    let g = mesh.grids();
    let dims = [g[0].len(), g[1].len(), g[2].len()];
    let n_points = dims.iter().product::<usize>();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{}", title.replace('\n', " "));
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_GRID");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(out, "POINTS {n_points} double");
    let mut values = Vec::with_capacity(n_points);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", g[0][i], g[1][j], g[2][k]);
                values.push(sol.vertex_displacement([i, j, k]));
            }
        }
    }
    let _ = writeln!(out, "POINT_DATA {n_points}");
    let parts: [(&str, fn(C64) -> f64); 3] = [("re", |z| z.re), ("im", |z| z.im), ("abs", |z| z.norm())];
    for (suffix, part) in parts {
        let _ = writeln!(out, "VECTORS displacement_{suffix} double");
        for u in &values {
            let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", part(u[0]), part(u[1]), part(u[2]));
        }
    }
    let n_cells = mesh.n_elements();
    let _ = writeln!(out, "CELL_DATA {n_cells}");
    let _ = writeln!(out, "VECTORS traction_max_abs double");
    for e in 0..n_cells {
        let faces = mesh.element_faces(ElementId(e));
        let t = [0, 1, 2].map(|c| faces.iter().map(|&f| sol.face_traction_max(f, c)).fold(0.0, f64::max));
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", t[0], t[1], t[2]);
    }
    out
}

pub fn write_vtk(path: &Path, sol: &DpgSolution, title: &str) -> Result<()> {
    write_file(path, &vtk_string(sol, title))
}

/// `manifest.txt`: free-form `key = value` header lines followed by the
/// resolved configuration.
pub fn write_manifest(path: &Path, header: &[(String, String)], resolved_config: &str) -> Result<()> {
    let mut out = String::new();
    for (k, v) in header {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out.push('\n');
    out.push_str(resolved_config);
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_history_is_header_only() {
        assert_eq!(convergence_csv(&[]), format!("{}\n", CSV_HEADER.join(",")));
        assert!(parse_convergence_csv(&convergence_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn one_record_round_trips_bit_exactly() {
        let r = ConvergenceRecord {
            step: 3,
            p: 2,
            h_max: 0.1 + 0.2,
            dofs: 1234,
            rel_h1_error: Some(std::f64::consts::PI * 1e-7),
            global_residual: 1.0 / 3.0,
            qoi: Some(C64::new(-0.1064, 1e-300)),
        };
        let text = convergence_csv(&[r]);
        assert_eq!(text.lines().count(), 2);
        let back = parse_convergence_csv(&text).unwrap();
        assert_eq!(back, vec![r]);
        assert_eq!(back[0].h_max.to_bits(), r.h_max.to_bits());
    }

    #[test]
    fn missing_values_are_nan_cells() {
        let r = ConvergenceRecord {
            step: 0,
            p: 1,
            h_max: 1.0,
            dofs: 10,
            rel_h1_error: None,
            global_residual: 0.5,
            qoi: None,
        };
        let text = convergence_csv(&[r]);
        assert!(text.lines().nth(1).unwrap().contains(",nan,"));
        assert_eq!(parse_convergence_csv(&text).unwrap(), vec![r]);
    }
}
