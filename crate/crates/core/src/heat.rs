//! One backward-Euler step of the heat equation with Newton cooling on the
//! whole boundary and a regularized Joule source.
//!
//! With `κ` and the source frozen at a given field the step is the linear
//! system
//!
//! ```text
//! (M/Δt + A_κ + g B) u⁺ = M/Δt u⁻ + g h B·1 + F_ε
//! ```
//!
//! which is SPD because `M/Δt` is.

use crate::constitutive::ConstitutiveSpec;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_load, assemble_mass, assemble_weighted_stiffness, lumped_mass,
    solve_sparse, BoundaryFilter, CsrMatrix, ScalarField, SparseSystem,
};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for LinearOptions {
    fn default() -> Self {
        LinearOptions {
            rtol: 1e-13,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HeatStepInputs<'a> {
    pub u_prev: &'a ScalarField,
    pub phi: &'a ScalarField,
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub eps: f64,
    pub spec: &'a ConstitutiveSpec,
    /// Lump both the domain and the boundary mass.
    pub lumped: bool,
}

impl HeatStepInputs<'_> {
    fn check(&self, mesh: &Mesh) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be > 0 (got {})", self.dt)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps must be > 0 (got {})", self.eps)));
        }
        self.u_prev.check(mesh, "previous temperature")?;
        self.phi.check(mesh, "potential")
    }
}

/// Per-triangle `f_ε(x_K, t, u_K, ∇φ_K)` with `u` evaluated at `u_eval`.
pub fn source_per_triangle(
    mesh: &Mesh,
    phi: &ScalarField,
    u_eval: &ScalarField,
    t: f64,
    eps: f64,
    spec: &ConstitutiveSpec,
) -> Result<Vec<f64>> {
    (0..mesh.num_triangles())
        .map(|k| {
            let geo = mesh.triangle_geometry(k);
            let xi = geo.gradient(phi.triangle_values(mesh, k));
            spec.source_f_eps(geo.barycenter, t, u_eval.barycenter_value(mesh, k), xi, eps)
        })
        .collect()
}

/// `∫_Ω f_ε` with the one-point rule.
pub fn source_integral(
    mesh: &Mesh,
    phi: &ScalarField,
    u_eval: &ScalarField,
    t: f64,
    eps: f64,
    spec: &ConstitutiveSpec,
) -> Result<f64> {
    let f = source_per_triangle(mesh, phi, u_eval, t, eps, spec)?;
    Ok(f.iter()
        .enumerate()
        .map(|(k, v)| v * mesh.triangle_geometry(k).area)
        .sum())
}

/// Advances the temperature by one implicit step with `κ` and the source's
/// temperature argument frozen at `kappa_freeze`.
pub fn step_heat(mesh: &Mesh, inputs: &HeatStepInputs<'_>, kappa_freeze: &ScalarField, linear: &LinearOptions) -> Result<ScalarField> {
    inputs.check(mesh)?;
    kappa_freeze.check(mesh, "freezing field")?;
    let spec = inputs.spec;

    let kappa: Vec<f64> = (0..mesh.num_triangles())
        .map(|k| spec.kappa(kappa_freeze.barycenter_value(mesh, k)))
        .collect();
    let stiffness = assemble_weighted_stiffness(mesh, &kappa)?;
    let (mass, boundary) = if inputs.lumped {
        let b = assemble_boundary_mass(mesh, BoundaryFilter::All).row_sums();
        (
            CsrMatrix::from_diagonal(&lumped_mass(mesh)),
            CsrMatrix::from_diagonal(&b),
        )
    } else {
        (assemble_mass(mesh), assemble_boundary_mass(mesh, BoundaryFilter::All))
    };
    let matrix = CsrMatrix::linear_combination(&[
        (1.0 / inputs.dt, &mass),
        (1.0, &stiffness),
        (spec.g, &boundary),
    ]);

    let source = source_per_triangle(mesh, inputs.phi, kappa_freeze, inputs.t, inputs.eps, spec)?;
    let load = assemble_load(mesh, &source);
    let inertia = mass.mul_vec(&inputs.u_prev.values);
    let ambient = boundary.row_sums();
    let rhs: Vec<f64> = (0..mesh.num_nodes())
        .map(|i| inertia[i] / inputs.dt + spec.g * spec.h * ambient[i] + load[i])
        .collect();

    let system = SparseSystem::new(matrix, rhs);
    let values = solve_sparse(&system, linear.rtol, linear.max_iter, Some(&inputs.u_prev.values))?;
    Ok(ScalarField::new(values))
}
