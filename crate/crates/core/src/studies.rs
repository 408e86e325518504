//! Refinement studies against manufactured solutions.
//!
//! * `potential-p2`, `potential-p3`: on the unit square with `u = x`,
//!   `σ0(u) = 1 + u²`, `φ = 0` on the left and `1` on the right, the potential
//!   depends on `x` only: `atan(x)/atan(1)` for `p = 2` and
//!   `asinh(x)/asinh(1)` for `p = 3, δ = 0`.
//! * `heat-decay`: spatially uniform cooling with a stiff conductivity,
//!   compared with `h + (1 − h) e^{−g |∂Ω| t / |Ω|}` while the step count doubles.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::constitutive::{ConstitutiveSpec, Profile};
use crate::error::Result;
use crate::fem::ScalarField;
use crate::heat::{step_heat, HeatStepInputs, LinearOptions};
use crate::mesh::{build_rect_mesh, Side};
use crate::potential::{solve_potential, PotentialOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub case: &'static str,
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    pub max_error: f64,
    /// Gradient error in `L^p`; `NaN` where not applicable.
    pub grad_error: f64,
    /// Observed order of `max_error` against the previous level.
    pub rate: f64,
}

impl StudyRow {
    pub const CSV_HEADER: &'static str = "case,level,h,dt,max_error,grad_error,rate";
}

fn rates(rows: &mut [StudyRow]) {
    for i in 1..rows.len() {
        rows[i].rate = (rows[i - 1].max_error / rows[i].max_error).log2();
    }
}

/// The `u = x`, `σ0 = 1 + u²` potential problem on `n · 2^l` meshes.
pub fn potential_study(p: f64, base_n: usize, levels: usize) -> Result<Vec<StudyRow>> {
    let (case, exact, slope): (&'static str, fn(f64) -> f64, fn(f64) -> f64) = if p == 2.0 {
        (
            "potential-p2",
            |x| x.atan() / 1f64.atan(),
            |x| 1.0 / ((1.0 + x * x) * 1f64.atan()),
        )
    } else {
        (
            "potential-p3",
            |x| x.asinh() / 1f64.asinh(),
            |x| 1.0 / ((1.0 + x * x).sqrt() * 1f64.asinh()),
        )
    };
    let spec = ConstitutiveSpec {
        p,
        sigma0: Profile::Custom {
            f: Arc::new(|u| 1.0 + u * u),
            lower: 1.0,
            upper: 2.0,
        },
        ..ConstitutiveSpec::ohmic(1.0, 1.0, 0.0, 1.0, 0.0)
    };
    let opts = PotentialOptions {
        rtol: 1e-11,
        ..PotentialOptions::default()
    };
    let mut rows = Vec::new();
    for level in 0..levels {
        let n = base_n << level;
        let mesh = build_rect_mesh(n, n, 1.0, 1.0, &[Side::Left, Side::Right])?;
        let u = ScalarField::from_fn(&mesh, |x, _| x);
        let phi_d: BTreeMap<usize, f64> = mesh
            .dirichlet_nodes()
            .into_iter()
            .map(|i| (i, if mesh.nodes[i][0] > 0.5 { 1.0 } else { 0.0 }))
            .collect();
        let (phi, _) = solve_potential(&mesh, &u, &phi_d, &spec, &opts, None)?;
        let max_error = mesh
            .nodes
            .iter()
            .zip(&phi.values)
            .map(|([x, _], v)| (v - exact(*x)).abs())
            .fold(0.0, f64::max);
        let grad_error = (0..mesh.num_triangles())
            .map(|k| {
                let geo = mesh.triangle_geometry(k);
                let g = geo.gradient(phi.triangle_values(&mesh, k));
                let d = ((g[0] - slope(geo.barycenter[0])).powi(2) + g[1].powi(2)).sqrt();
                geo.area * d.powf(p)
            })
            .sum::<f64>()
            .powf(1.0 / p);
        rows.push(StudyRow {
            case,
            level,
            h: 1.0 / n as f64,
            dt: f64::NAN,
            max_error,
            grad_error,
            rate: f64::NAN,
        });
    }
    rates(&mut rows);
    Ok(rows)
}

/// Parameters of the uniform cooling study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySetup {
    pub n: usize,
    pub lx: f64,
    pub ly: f64,
    pub g: f64,
    pub h: f64,
    pub kappa: f64,
    pub t_final: f64,
}

impl Default for DecaySetup {
    fn default() -> Self {
        DecaySetup {
            n: 4,
            lx: 1.0,
            ly: 1.0,
            g: 1.0,
            h: 0.0,
            kappa: 1e4,
            t_final: 0.5,
        }
    }
}

impl DecaySetup {
    pub fn rate(&self) -> f64 {
        self.g * 2.0 * (self.lx + self.ly) / (self.lx * self.ly)
    }

    pub fn exact(&self, t: f64) -> f64 {
        self.h + (1.0 - self.h) * (-self.rate() * t).exp()
    }

    /// Terminal field after `steps` implicit steps from `u0 ≡ 1`.
    pub fn run(&self, steps: usize) -> Result<ScalarField> {
        let mesh = build_rect_mesh(self.n, self.n, self.lx, self.ly, &[Side::Left])?;
        let spec = ConstitutiveSpec::ohmic(1.0, self.kappa, 0.0, self.g, self.h);
        let phi = ScalarField::constant(&mesh, 0.0);
        let dt = self.t_final / steps as f64;
        let mut u = ScalarField::constant(&mesh, 1.0);
        for m in 0..steps {
            let inputs = HeatStepInputs {
                u_prev: &u,
                phi: &phi,
                t: (m + 1) as f64 * dt,
                dt,
                eps: 1.0,
                spec: &spec,
                lumped: false,
            };
            u = step_heat(&mesh, &inputs, &u, &LinearOptions::default())?;
        }
        Ok(u)
    }

    pub fn terminal_error(&self, steps: usize) -> Result<f64> {
        let exact = self.exact(self.t_final);
        Ok(self.run(steps)?.values.iter().map(|v| (v - exact).abs()).fold(0.0, f64::max))
    }
}

/// Terminal error of the uniform cooling problem for `base_steps · 2^l` steps.
pub fn decay_study(setup: &DecaySetup, base_steps: usize, levels: usize) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::new();
    for level in 0..levels {
        let steps = base_steps << level;
        rows.push(StudyRow {
            case: "heat-decay",
            level,
            h: setup.lx.max(setup.ly) / setup.n as f64,
            dt: setup.t_final / steps as f64,
            max_error: setup.terminal_error(steps)?,
            grad_error: f64::NAN,
            rate: f64::NAN,
        });
    }
    rates(&mut rows);
    Ok(rows)
}
