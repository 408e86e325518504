//! The full `run` pipeline: ε-continuation, ledger verification and output
//! files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{OutputFormat, RunConfig};
use crate::constitutive::Eta;
use crate::coupling::{eps_continuation, Continuation};
use crate::error::{Error, Result};
use crate::estimates::{verify_ledger, VerificationReport};
use crate::io::{write_file, write_ledger_csv, write_trajectory_csv, write_trajectory_vtk};
use crate::mesh::validate;

#[derive(Debug, Clone)]
pub struct RunOutputs {
    pub continuation: Continuation,
    pub verification: VerificationReport,
    pub files: Vec<PathBuf>,
}

impl RunOutputs {
    pub fn passed(&self) -> bool {
        self.verification.passed()
    }
}

/// For data with no heating and a constant initial value, the closed-form
/// lumped response `h + (u0 − h) e^{−g |∂Ω| T / |Ω|}` with the leading-order
/// backward Euler error bound `½ a² T Δt |u0 − h|`, `a = g |∂Ω| / |Ω|`.
pub fn uniform_decay_reference(cfg: &RunConfig) -> Option<(f64, f64)> {
    let spec = &cfg.constitutive;
    let Eta::Constant(eta) = spec.eta else { return None };
    if eta != 0.0 {
        return None;
    }
    let u0 = match &cfg.initial {
        crate::boundary::InitialData::Expression(e) | crate::boundary::InitialData::ElementAverage(e) => e.as_constant()?,
    };
    let m = &cfg.mesh;
    let a = spec.g * 2.0 * (m.lx + m.ly) / (m.lx * m.ly);
    let t = cfg.coupling.t_final;
    let exact = spec.h + (u0 - spec.h) * (-a * t).exp();
    let bound = 0.5 * a * a * t * cfg.coupling.dt() * (u0 - spec.h).abs();
    Some((exact, bound))
}

/// Runs every ε of the schedule and writes the requested outputs into `out`:
/// `trajectory_eps{i}.csv`, `ledger.csv`, `fields_eps{i}_{step}.vtk` and
/// `report.txt`.
pub fn run_pipeline(cfg: &RunConfig, out: &Path) -> Result<RunOutputs> {
    let mesh = cfg.mesh.build()?;
    let mesh_report = validate(&mesh);
    if !mesh_report.ok() {
        return Err(Error::Mesh(format!("{:?}", mesh_report.violations)));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let u0 = cfg.initial.to_field(&mesh);
    let continuation = eps_continuation(&mesh, &cfg.coupling, &cfg.constitutive, &cfg.boundary, &u0)?;
    let mut verification = verify_ledger(&continuation.ledger);

    if let Some((exact, bound)) = uniform_decay_reference(cfg) {
        for (i, traj) in continuation.trajectories.iter().enumerate() {
            let Some(traj) = traj else { continue };
            let last = traj.u.last().expect("trajectory has an initial state");
            let err = last.values.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max);
            verification.push(
                format!("uniform-decay eps[{i}]"),
                err <= bound,
                format!("terminal max error {err:.6e} vs exp reference {exact:.6e}, bound {bound:.6e}"),
            );
        }
    }

    let mut files = Vec::new();
    let csv = cfg.output.formats.contains(&OutputFormat::Csv);
    let vtk = cfg.output.formats.contains(&OutputFormat::Vtk);
    let p = cfg.constitutive.p;
    for (i, traj) in continuation.trajectories.iter().enumerate() {
        let Some(traj) = traj else { continue };
        if csv {
            let path = out.join(format!("trajectory_eps{i}.csv"));
            write_file(&path, |w| write_trajectory_csv(w, &mesh, traj, p))?;
            files.push(path);
        }
        if vtk {
            files.extend(write_trajectory_vtk(out, &format!("fields_eps{i}"), &mesh, traj, cfg.output.stride)?);
        }
    }
    if csv {
        let path = out.join("ledger.csv");
        write_file(&path, |w| write_ledger_csv(w, &continuation.ledger))?;
        files.push(path);
    }

    let mut text = String::new();
    for row in &continuation.ledger.rows {
        let status = row.failure.as_deref().unwrap_or("ok");
        let _ = writeln!(text, "eps = {:e}: {status}", row.eps);
    }
    let _ = write!(text, "{verification}");
    let _ = writeln!(text, "overall: {}", if verification.passed() { "PASS" } else { "FAIL" });
    let path = out.join("report.txt");
    write_file(&path, |w| std::io::Write::write_all(w, text.as_bytes()))?;
    files.push(path);

    Ok(RunOutputs {
        continuation,
        verification,
        files,
    })
}
