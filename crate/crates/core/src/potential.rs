//! Quasilinear potential equation `-∇·(σ(u, |∇φ|) ∇φ) = 0` with mixed
//! Dirichlet/insulating boundary, solved by frozen-coefficient (Kačanov)
//! iteration for a fixed temperature field.
//!
//! Each sweep freezes the conductivity at the current iterate, solves the
//! resulting linear problem, and moves towards that solution by a relaxation
//! factor `ω = min(1, 1/(p-1))`. For `p ≤ 2` this is the plain Kačanov step.
//! For `p > 2` the undamped step oscillates (in one dimension the gradient
//! error is multiplied by `-(p-2)` each sweep), and `ω = 1/(p-1)` cancels that
//! factor. The step is halved whenever the energy
//! `E(φ) = Σ_K σ0(u_K) (δ + |∇φ|²_K)^(p/2) |K|` would increase, so `E` never
//! goes up.

use std::collections::BTreeMap;

use crate::constitutive::ConstitutiveSpec;
use crate::error::{Error, Result};
use crate::estimates::w1p_seminorm;
use crate::fem::{apply_dirichlet, assemble_weighted_stiffness, solve_sparse, ScalarField, SparseSystem};
use crate::mesh::Mesh;

/// Nodal Dirichlet values, keyed by node index.
pub type BoundaryValues = BTreeMap<usize, f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialOptions {
    pub rtol: f64,
    pub max_iter: usize,
    pub linear_rtol: f64,
    pub linear_max_iter: usize,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        PotentialOptions {
            rtol: 1e-8,
            max_iter: 200,
            linear_rtol: 1e-13,
            linear_max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialReport {
    pub iterations: usize,
    /// `W^{1,p}` seminorm of the last increment.
    pub increment: f64,
    /// Euclidean norm of the free-node residual of the last iterate.
    pub residual: f64,
    pub converged: bool,
    /// Energy of the initial guess followed by one entry per sweep.
    pub energies: Vec<f64>,
}

pub fn check_boundary_values(mesh: &Mesh, phi_d: &BoundaryValues) -> Result<()> {
    let dirichlet = mesh.dirichlet_nodes();
    if let Some(missing) = dirichlet.iter().find(|i| !phi_d.contains_key(i)) {
        return Err(Error::Constraint(format!(
            "no boundary value for Dirichlet node {missing}"
        )));
    }
    if let Some(extra) = phi_d.keys().find(|i| !dirichlet.contains(i)) {
        return Err(Error::Constraint(format!(
            "boundary value given for node {extra}, which is not on the Dirichlet boundary"
        )));
    }
    if let Some((i, v)) = phi_d.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Constraint(format!("non-finite boundary value {v} at node {i}")));
    }
    Ok(())
}

fn solve_weighted(
    mesh: &Mesh,
    weights: &[f64],
    phi_d: &BoundaryValues,
    opts: &PotentialOptions,
    guess: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let a = assemble_weighted_stiffness(mesh, weights)?;
    let system = apply_dirichlet(SparseSystem::new(a, vec![0.0; mesh.num_nodes()]), mesh, phi_d)?;
    solve_sparse(&system, opts.linear_rtol, opts.linear_max_iter, guess)
}

/// Discrete harmonic extension of the boundary values (unit weight).
pub fn harmonic_lift(mesh: &Mesh, phi_d: &BoundaryValues, opts: &PotentialOptions) -> Result<ScalarField> {
    check_boundary_values(mesh, phi_d)?;
    let weights = vec![1.0; mesh.num_triangles()];
    Ok(ScalarField::new(solve_weighted(mesh, &weights, phi_d, opts, None)?))
}

fn conductivities(mesh: &Mesh, phi: &ScalarField, u: &ScalarField, spec: &ConstitutiveSpec) -> Result<Vec<f64>> {
    (0..mesh.num_triangles())
        .map(|k| {
            let geo = mesh.triangle_geometry(k);
            let g = geo.gradient(phi.triangle_values(mesh, k));
            spec.sigma(u.barycenter_value(mesh, k), g[0].hypot(g[1]))
        })
        .collect()
}

/// `Σ_K σ0(u_K) (δ + |∇φ|²_K)^(p/2) |K|`.
pub fn energy(mesh: &Mesh, phi: &ScalarField, u: &ScalarField, spec: &ConstitutiveSpec) -> f64 {
    (0..mesh.num_triangles())
        .map(|k| {
            let geo = mesh.triangle_geometry(k);
            let g = geo.gradient(phi.triangle_values(mesh, k));
            let s = spec.delta + g[0] * g[0] + g[1] * g[1];
            spec.sigma0.eval(u.barycenter_value(mesh, k)) * s.powf(0.5 * spec.p) * geo.area
        })
        .sum()
}

/// Euclidean norm of `Σ_K σ(u_K, |∇φ|_K) ∇φ·∇λ_i |K|` over nodes off the
/// Dirichlet boundary.
pub fn discrete_residual(mesh: &Mesh, phi: &ScalarField, u: &ScalarField, spec: &ConstitutiveSpec) -> Result<f64> {
    let dirichlet = mesh.dirichlet_nodes();
    let mut parts: Vec<(usize, f64)> = Vec::with_capacity(3 * mesh.num_triangles());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let geo = mesh.triangle_geometry(k);
        let g = geo.gradient(phi.triangle_values(mesh, k));
        let s = spec.sigma(u.barycenter_value(mesh, k), g[0].hypot(g[1]))?;
        for (a, &i) in tri.iter().enumerate() {
            let gl = geo.grads[a];
            parts.push((i, s * (g[0] * gl[0] + g[1] * gl[1]) * geo.area));
        }
    }
    parts.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
    let mut r = vec![0.0; mesh.num_nodes()];
    for (i, v) in parts {
        r[i] += v;
    }
    Ok(r
        .iter()
        .enumerate()
        .filter(|(i, _)| !dirichlet.contains(i))
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt())
}

/// Kačanov solve of the potential equation for a frozen temperature `u`.
///
/// Without an initial guess the iteration starts from the harmonic lift of
/// `phi_d`. A supplied guess has its Dirichlet entries overwritten by `phi_d`.
pub fn solve_potential(
    mesh: &Mesh,
    u: &ScalarField,
    phi_d: &BoundaryValues,
    spec: &ConstitutiveSpec,
    opts: &PotentialOptions,
    initial_guess: Option<&ScalarField>,
) -> Result<(ScalarField, PotentialReport)> {
    if spec.is_singular() {
        return Err(Error::Config(format!(
            "p = {} < 2 requires delta > 0",
            spec.p
        )));
    }
    u.check(mesh, "temperature")?;
    check_boundary_values(mesh, phi_d)?;

    let mut phi = match initial_guess {
        Some(g) => {
            g.check(mesh, "initial guess")?;
            let mut g = g.clone();
            for (&i, &v) in phi_d {
                g.values[i] = v;
            }
            g
        }
        None => harmonic_lift(mesh, phi_d, opts)?,
    };

    let p = spec.p;
    let omega0 = if p > 2.0 { 1.0 / (p - 1.0) } else { 1.0 };
    let mut e_cur = energy(mesh, &phi, u, spec);
    let mut report = PotentialReport {
        iterations: 0,
        increment: f64::INFINITY,
        residual: f64::INFINITY,
        converged: false,
        energies: vec![e_cur],
    };

    for it in 1..=opts.max_iter {
        let weights = conductivities(mesh, &phi, u, spec)?;
        let frozen = solve_weighted(mesh, &weights, phi_d, opts, Some(&phi.values))?;

        let mut omega = omega0;
        let mut candidate;
        let mut e_new;
        loop {
            candidate = ScalarField::new(
                phi.values
                    .iter()
                    .zip(&frozen)
                    .map(|(old, new)| old + omega * (new - old))
                    .collect(),
            );
            e_new = energy(mesh, &candidate, u, spec);
            if e_new <= e_cur || omega < 1.0 / 1024.0 {
                break;
            }
            omega *= 0.5;
        }

        let diff = ScalarField::new(
            candidate
                .values
                .iter()
                .zip(&phi.values)
                .map(|(a, b)| a - b)
                .collect(),
        );
        report.iterations = it;
        report.increment = w1p_seminorm(mesh, &diff, p);
        report.residual = discrete_residual(mesh, &candidate, u, spec)?;
        report.energies.push(e_new);
        let scale = w1p_seminorm(mesh, &candidate, p);
        phi = candidate;
        e_cur = e_new;

        if report.increment <= opts.rtol * scale && report.residual <= opts.rtol {
            report.converged = true;
            return Ok((phi, report));
        }
    }
    Err(Error::Nonconvergence {
        report: Box::new(report),
    })
}
