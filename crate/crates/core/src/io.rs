//! CSV and legacy ASCII VTK writers.
//!
//! Floating-point numbers are written with 17 significant digits so that a
//! read-back reproduces them exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::coupling::Trajectory;
use crate::error::{Error, Result};
use crate::estimates::{lp_norm, w1p_seminorm, EstimateLedger, EstimateRow};
use crate::fem::ScalarField;
use crate::mesh::Mesh;

pub const TRAJECTORY_HEADER: &str = "t,step,fp_iters,kacanov_iters,u_L1,u_L2,phi_W1p,f_eps_int";

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv<W: Write>(mut w: W, mesh: &Mesh, traj: &Trajectory, p: f64) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for m in 0..traj.u.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            format_f64(traj.times[m]),
            m,
            traj.fp_iters[m],
            traj.reports[m].iterations,
            format_f64(lp_norm(mesh, &traj.u[m], 1.0)),
            format_f64(lp_norm(mesh, &traj.u[m], 2.0)),
            format_f64(w1p_seminorm(mesh, &traj.phi[m], p)),
            format_f64(traj.f_eps_integrals[m]),
        )?;
    }
    Ok(())
}

pub fn write_ledger_csv<W: Write>(mut w: W, ledger: &EstimateLedger) -> std::io::Result<()> {
    writeln!(w, "{}", EstimateRow::CSV_HEADER)?;
    for row in &ledger.rows {
        let cells: Vec<String> = row.csv_values().iter().map(|&v| format_f64(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Legacy ASCII unstructured grid with point data `phi` and `u`.
pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, phi: &ScalarField, u: &ScalarField, title: &str) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.num_nodes())?;
    for [x, y] in &mesh.nodes {
        writeln!(w, "{} {} 0", format_f64(*x), format_f64(*y))?;
    }
    let t = mesh.num_triangles();
    writeln!(w, "CELLS {} {}", t, 4 * t)?;
    for [a, b, c] in &mesh.triangles {
        writeln!(w, "3 {a} {b} {c}")?;
    }
    writeln!(w, "CELL_TYPES {t}")?;
    for _ in 0..t {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.num_nodes())?;
    for (name, field) in [("phi", phi), ("u", u)] {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &field.values {
            writeln!(w, "{}", format_f64(*v))?;
        }
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `body`, attaching the path
/// to any I/O failure.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// One VTK file per dumped step (every `stride` steps plus the last),
/// named `{prefix}_{step:05}.vtk`.
pub fn write_trajectory_vtk(dir: &Path, prefix: &str, mesh: &Mesh, traj: &Trajectory, stride: usize) -> Result<Vec<PathBuf>> {
    let stride = stride.max(1);
    let last = traj.steps();
    let mut written = Vec::new();
    for m in (0..=last).filter(|m| m % stride == 0 || *m == last) {
        let path = dir.join(format!("{prefix}_{m:05}.vtk"));
        let title = format!("eps={} t={}", format_f64(traj.eps), format_f64(traj.times[m]));
        write_file(&path, |w| write_vtk(w, mesh, &traj.phi[m], &traj.u[m], &title))?;
        written.push(path);
    }
    Ok(written)
}

/// A parsed numeric CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn parse_csv(text: &str) -> std::result::Result<CsvTable, String> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| "empty CSV".to_string())?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|_| format!("row {}: bad number '{c}'", i + 1)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("row {} has {} columns, expected {}", i + 1, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}
