//! Applied voltage on the Dirichlet boundary and initial temperature data.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fem::{lumped_mass, ScalarField};
use crate::mesh::{Mesh, Side};
use crate::potential::BoundaryValues;

/// Applied voltage `φ_D(x, t)`, sampled at Dirichlet nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryData {
    /// A constant voltage per Dirichlet side.
    Sides(BTreeMap<Side, f64>),
    /// `a + b·x` on every Dirichlet node.
    LinearX { a: f64, b: f64 },
    /// Per-side voltage `V·min(t / t_ramp, 1)`.
    Ramp { values: BTreeMap<Side, f64>, t_ramp: f64 },
}

impl BoundaryData {
    /// Grounded left side, voltage `v` on the right.
    pub fn left_right(v: f64) -> Self {
        BoundaryData::Sides(BTreeMap::from([(Side::Left, 0.0), (Side::Right, v)]))
    }

    pub fn issues(&self, dirichlet_sides: &[Side]) -> Vec<String> {
        let mut issues = Vec::new();
        match self {
            BoundaryData::Sides(values) | BoundaryData::Ramp { values, .. } => {
                for side in dirichlet_sides {
                    if !values.contains_key(side) {
                        issues.push(format!("no voltage given for Dirichlet side {side}"));
                    }
                }
                if let Some((side, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
                    issues.push(format!("voltage {v} on side {side} is not finite"));
                }
            }
            BoundaryData::LinearX { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    issues.push("linear boundary coefficients must be finite".to_string());
                }
            }
        }
        if let BoundaryData::Ramp { t_ramp, .. } = self {
            if !(*t_ramp > 0.0) {
                issues.push(format!("t_ramp must be > 0 (got {t_ramp})"));
            }
        }
        issues
    }

    /// Nodal values at time `t`. Corner nodes shared by two Dirichlet sides
    /// take the value of the first side in left, right, bottom, top order.
    pub fn nodal_values(&self, mesh: &Mesh, t: f64) -> Result<BoundaryValues> {
        let mut out = BoundaryValues::new();
        for side in Side::ALL {
            let nodes = mesh.dirichlet_nodes_on(side);
            if nodes.is_empty() {
                continue;
            }
            for i in nodes {
                if out.contains_key(&i) {
                    continue;
                }
                let v = match self {
                    BoundaryData::Sides(values) => *values.get(&side).ok_or_else(|| missing(side))?,
                    BoundaryData::LinearX { a, b } => a + b * mesh.nodes[i][0],
                    BoundaryData::Ramp { values, t_ramp } => {
                        values.get(&side).ok_or_else(|| missing(side))? * (t / t_ramp).min(1.0)
                    }
                };
                out.insert(i, v);
            }
        }
        Ok(out)
    }
}

fn missing(side: Side) -> Error {
    Error::Config(format!("no voltage given for Dirichlet side {side}"))
}

/// Initial temperature `u_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Continuous data, sampled at the nodes.
    Expression(Expr),
    /// Rough data, projected by averaging barycentric samples of the
    /// surrounding triangles.
    ElementAverage(Expr),
}

impl InitialData {
    pub fn constant(c: f64) -> Self {
        InitialData::Expression(Expr::constant(c))
    }

    pub fn to_field(&self, mesh: &Mesh) -> ScalarField {
        match self {
            InitialData::Expression(e) => ScalarField::from_fn(mesh, |x, y| e.eval(x, y)),
            InitialData::ElementAverage(e) => project_element_average(mesh, |x, y| e.eval(x, y)),
        }
    }
}

/// Area-weighted mean of the barycentric values of the triangles around each node.
pub fn project_element_average(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    let mut num = vec![0.0; mesh.num_nodes()];
    let mut den = vec![0.0; mesh.num_nodes()];
    for k in 0..mesh.num_triangles() {
        let geo = mesh.triangle_geometry(k);
        let v = f(geo.barycenter[0], geo.barycenter[1]);
        for &i in &mesh.triangles[k] {
            num[i] += geo.area * v;
            den[i] += geo.area;
        }
    }
    ScalarField::new(num.iter().zip(&den).map(|(n, d)| n / d).collect())
}

/// Averaging radius used to regularize the initial data.
pub fn smoothing_radius(mesh: &Mesh, eps: f64) -> f64 {
    eps * mesh.lx.min(mesh.ly)
}

/// `u_{0,ε}`: mass-weighted average of `u_0` over the ball of radius
/// `smoothing_radius(ε)` around each node.
pub fn smooth_initial(mesh: &Mesh, u0: &ScalarField, eps: f64) -> ScalarField {
    let rho = smoothing_radius(mesh, eps);
    let m = lumped_mass(mesh);
    let rho2 = rho * rho;
    let values = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, pi)| {
            let (mut num, mut den) = (0.0, 0.0);
            for (j, pj) in mesh.nodes.iter().enumerate() {
                let d2 = (pi[0] - pj[0]).powi(2) + (pi[1] - pj[1]).powi(2);
                if j == i || d2 <= rho2 {
                    num += m[j] * u0.values[j];
                    den += m[j];
                }
            }
            if den > 0.0 {
                num / den
            } else {
                u0.values[i]
            }
        })
        .collect();
    ScalarField::new(values)
}
