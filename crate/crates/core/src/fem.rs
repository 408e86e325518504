//! P1 assembly, Dirichlet elimination and a Jacobi-preconditioned conjugate
//! gradient solver.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// A nodal P1 coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        ScalarField {
            values: vec![c; mesh.num_nodes()],
        }
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField {
            values: mesh.nodes.iter().map(|p| f(p[0], p[1])).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean of the three vertex values of triangle `k`.
    pub fn barycenter_value(&self, mesh: &Mesh, k: usize) -> f64 {
        let [a, b, c] = mesh.triangles[k];
        (self.values[a] + self.values[b] + self.values[c]) / 3.0
    }

    pub fn triangle_values(&self, mesh: &Mesh, k: usize) -> [f64; 3] {
        let [a, b, c] = mesh.triangles[k];
        [self.values[a], self.values[b], self.values[c]]
    }

    pub fn check(&self, mesh: &Mesh, name: &str) -> Result<()> {
        if self.values.len() != mesh.num_nodes() {
            return Err(Error::Config(format!(
                "{name}: {} values for {} nodes",
                self.values.len(),
                mesh.num_nodes()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "{name}: non-finite value at node {i}"
            )));
        }
        Ok(())
    }
}

/// Square sparse matrix in compressed row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed. Each entry's contributions are added in
    /// ascending order, so the result does not depend on triplet order.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.total_cmp(&b.2))
        });
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range for n = {n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        CsrMatrix {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `Σ αₖ Aₖ` over matrices of equal dimension.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let n = terms.first().map_or(0, |t| t.1.n);
        let mut triplets = Vec::new();
        for &(alpha, m) in terms {
            assert_eq!(m.n, n, "dimension mismatch in linear combination");
            triplets.extend(m.triplets().into_iter().map(|(i, j, v)| (i, j, alpha * v)));
        }
        CsrMatrix::from_triplets(n, triplets)
    }

    /// Largest `|a_ij − a_ji|` relative to the largest `|a_ij|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }
}

/// `Σ_K w_K ∫_K ∇λ_i·∇λ_j`.
pub fn assemble_weighted_stiffness(mesh: &Mesh, weights: &[f64]) -> Result<CsrMatrix> {
    if weights.len() != mesh.num_triangles() {
        return Err(Error::Assembly(format!(
            "{} weights for {} triangles",
            weights.len(),
            mesh.num_triangles()
        )));
    }
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (k, (tri, &w)) in mesh.triangles.iter().zip(weights).enumerate() {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Assembly(format!(
                "weight {w} on triangle {k} is not a finite non-negative number"
            )));
        }
        let geo = mesh.triangle_geometry(k);
        for a in 0..3 {
            for b in 0..3 {
                let (ga, gb) = (geo.grads[a], geo.grads[b]);
                let v = w * geo.area * (ga[0] * gb[0] + ga[1] * gb[1]);
                triplets.push((tri[a], tri[b], v));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.num_nodes(), triplets))
}

/// Consistent P1 mass matrix, `|K|/12 · [[2,1,1],[1,2,1],[1,1,2]]` per triangle.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.triangle_geometry(k).area;
        for a in 0..3 {
            for b in 0..3 {
                let v = if a == b { area / 6.0 } else { area / 12.0 };
                triplets.push((tri[a], tri[b], v));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), triplets)
}

/// Row sums of the consistent mass matrix (one third of the adjacent area).
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_nodes()];
    let mut parts: Vec<(usize, f64)> = Vec::with_capacity(3 * mesh.num_triangles());
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let third = mesh.triangle_geometry(k).area / 3.0;
        parts.extend(tri.iter().map(|&i| (i, third)));
    }
    parts.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
    for (i, v) in parts {
        m[i] += v;
    }
    m
}

/// Which boundary edges a boundary integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryFilter {
    All,
    Tag(BoundaryTag),
}

impl BoundaryFilter {
    fn accepts(self, tag: BoundaryTag) -> bool {
        match self {
            BoundaryFilter::All => true,
            BoundaryFilter::Tag(t) => t == tag,
        }
    }
}

/// `∫ λ_i λ_j` over the selected boundary edges, `ℓ/6 · [[2,1],[1,2]]` per edge.
pub fn assemble_boundary_mass(mesh: &Mesh, filter: BoundaryFilter) -> CsrMatrix {
    let mut triplets = Vec::new();
    for e in mesh.boundary_edges.iter().filter(|e| filter.accepts(e.tag)) {
        let len = mesh.edge_length(e);
        let [a, b] = e.nodes;
        triplets.push((a, a, len / 3.0));
        triplets.push((b, b, len / 3.0));
        triplets.push((a, b, len / 6.0));
        triplets.push((b, a, len / 6.0));
    }
    CsrMatrix::from_triplets(mesh.num_nodes(), triplets)
}

/// Load vector of a per-triangle constant source, one-point barycentric rule.
pub fn assemble_load(mesh: &Mesh, per_triangle: &[f64]) -> Vec<f64> {
    let mut parts: Vec<(usize, f64)> = Vec::with_capacity(3 * mesh.num_triangles());
    for (k, (tri, &s)) in mesh.triangles.iter().zip(per_triangle).enumerate() {
        let v = s * mesh.triangle_geometry(k).area / 3.0;
        parts.extend(tri.iter().map(|&i| (i, v)));
    }
    parts.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
    let mut load = vec![0.0; mesh.num_nodes()];
    for (i, v) in parts {
        load[i] += v;
    }
    load
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Constrained nodes and their prescribed values.
    pub constrained: BTreeMap<usize, f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Self {
        assert_eq!(matrix.dim(), rhs.len(), "matrix and right-hand side disagree");
        SparseSystem {
            matrix,
            rhs,
            constrained: BTreeMap::new(),
        }
    }
}

/// Symmetric elimination of prescribed nodal values. Constrained rows and
/// columns are replaced by the identity and their coupling moves to the
/// right-hand side.
pub fn apply_dirichlet(
    system: SparseSystem,
    mesh: &Mesh,
    values: &BTreeMap<usize, f64>,
) -> Result<SparseSystem> {
    if values.is_empty() {
        return Ok(system);
    }
    let allowed = mesh.dirichlet_nodes();
    if let Some(bad) = values.keys().find(|i| !allowed.contains(i)) {
        return Err(Error::Constraint(format!(
            "node {bad} does not lie on the Dirichlet boundary"
        )));
    }
    let SparseSystem {
        matrix,
        mut rhs,
        mut constrained,
    } = system;
    let n = matrix.dim();
    let mut triplets = Vec::with_capacity(matrix.nnz());
    for i in 0..n {
        let row_fixed = values.contains_key(&i);
        for (j, v) in matrix.row(i) {
            match (row_fixed, values.get(&j)) {
                (false, None) => triplets.push((i, j, v)),
                (false, Some(&g)) => rhs[i] -= v * g,
                (true, _) => {}
            }
        }
    }
    for (&i, &g) in values {
        triplets.push((i, i, 1.0));
        rhs[i] = g;
        constrained.insert(i, g);
    }
    Ok(SparseSystem {
        matrix: CsrMatrix::from_triplets(n, triplets),
        rhs,
        constrained,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients, stopping at
/// `‖A x − b‖ ≤ rtol ‖b‖`. Constrained entries are returned verbatim.
pub fn solve_sparse(
    system: &SparseSystem,
    rtol: f64,
    max_iter: usize,
    initial_guess: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let a = &system.matrix;
    let b = &system.rhs;
    let n = a.dim();
    let mut x = match initial_guess {
        Some(x0) => {
            assert_eq!(x0.len(), n, "initial guess has the wrong length");
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    for (&i, &g) in &system.constrained {
        x[i] = g;
    }

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(x);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let tol = rtol * b_norm;
    let mut res = dot(&r, &r).sqrt();
    if res <= tol {
        return Ok(x);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt();
        if res <= tol {
            for (&i, &g) in &system.constrained {
                x[i] = g;
            }
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDivergence {
        iterations: max_iter,
        residual: res / b_norm,
    })
}

/// `sqrt(vᵀ M v)` with the consistent mass matrix.
pub fn consistent_l2_norm(mass: &CsrMatrix, v: &[f64]) -> f64 {
    dot(v, &mass.mul_vec(v)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, Side};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize, sides: &[Side]) -> Mesh {
        build_rect_mesh(n, n, 1.0, 1.0, sides).unwrap()
    }

    fn dense(m: &CsrMatrix) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(m.dim(), m.dim());
        for (i, j, v) in m.triplets() {
            d[(i, j)] += v;
        }
        d
    }

    #[test]
    fn stiffness_kills_constants() {
        let mesh = unit(1, &[Side::Left]);
        let a = assemble_weighted_stiffness(&mesh, &[1.0, 1.0]).unwrap();
        for s in a.row_sums() {
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn stiffness_exact_on_linear_fields() {
        let mesh = unit(6, &[Side::Left]);
        let w: Vec<f64> = (0..mesh.num_triangles()).map(|_| 1.0).collect();
        let a = assemble_weighted_stiffness(&mesh, &w).unwrap();
        let z = ScalarField::from_fn(&mesh, |x, y| 2.0 * x - 0.7 * y);
        let az = a.mul_vec(&z.values);
        let boundary: std::collections::BTreeSet<usize> =
            mesh.boundary_edges.iter().flat_map(|e| e.nodes).collect();
        for (i, v) in az.iter().enumerate() {
            if !boundary.contains(&i) {
                assert!(v.abs() < 1e-13, "node {i}: {v}");
            }
        }
    }

    #[test]
    fn stiffness_matches_dense_reference() {
        let mesh = build_rect_mesh(4, 3, 1.5, 0.7, &[Side::Left]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.gen_range(0.0..3.0)).collect();
        let a = assemble_weighted_stiffness(&mesh, &w).unwrap();

        // reference: per-element 3x3 blocks from the barycentric-gradient formula
        let n = mesh.num_nodes();
        let mut reference = DMatrix::<f64>::zeros(n, n);
        for (k, tri) in mesh.triangles.iter().enumerate() {
            let p: Vec<[f64; 2]> = tri.iter().map(|&i| mesh.nodes[i]).collect();
            let jac = DMatrix::from_row_slice(3, 3, &[
                1.0, p[0][0], p[0][1],
                1.0, p[1][0], p[1][1],
                1.0, p[2][0], p[2][1],
            ]);
            let area = 0.5 * jac.determinant();
            // columns of inv(jac) hold (c, gx, gy) of each barycentric coordinate
            let inv = jac.try_inverse().unwrap();
            for a_ in 0..3 {
                for b_ in 0..3 {
                    let g = inv[(1, a_)] * inv[(1, b_)] + inv[(2, a_)] * inv[(2, b_)];
                    reference[(tri[a_], tri[b_])] += w[k] * area * g;
                }
            }
        }
        let diff = (dense(&a) - reference).abs().max();
        assert!(diff < 1e-12, "max diff {diff}");
        assert!(a.symmetry_defect() <= 1e-14);
    }

    #[test]
    fn negative_weight_rejected() {
        let mesh = unit(1, &[Side::Left]);
        assert!(matches!(
            assemble_weighted_stiffness(&mesh, &[1.0, -0.5]),
            Err(Error::Assembly(_))
        ));
    }

    #[test]
    fn mass_totals() {
        let mesh = build_rect_mesh(5, 3, 2.0, 0.5, &[Side::Left]).unwrap();
        let m = assemble_mass(&mesh);
        let total: f64 = m.row_sums().iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        let lumped = lumped_mass(&mesh);
        for (a, b) in lumped.iter().zip(m.row_sums()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(m.symmetry_defect() <= 1e-14);

        let unit_sq = unit(4, &[Side::Left]);
        let b = assemble_boundary_mass(&unit_sq, BoundaryFilter::All);
        let total: f64 = b.row_sums().iter().sum();
        assert!((total - 4.0).abs() < 1e-13);
        let bd = assemble_boundary_mass(&unit_sq, BoundaryFilter::Tag(BoundaryTag::Dirichlet));
        let total: f64 = bd.row_sums().iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn single_edge_block() {
        let mut mesh = build_rect_mesh(1, 1, 3.0, 1.0, &[Side::Bottom]).unwrap();
        mesh.boundary_edges.retain(|e| e.side == Side::Bottom);
        let b = assemble_boundary_mass(&mesh, BoundaryFilter::All);
        let l = 3.0;
        assert!((b.get(0, 0) - l / 3.0).abs() < 1e-15);
        assert!((b.get(1, 1) - l / 3.0).abs() < 1e-15);
        assert!((b.get(0, 1) - l / 6.0).abs() < 1e-15);
        assert!((b.get(1, 0) - l / 6.0).abs() < 1e-15);
    }

    #[test]
    fn assembly_order_independent() {
        let mesh = unit(5, &[Side::Left]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.gen_range(0.1..2.0)).collect();
        let a = assemble_weighted_stiffness(&mesh, &w).unwrap();
        let mut shuffled = mesh.clone();
        let mut order: Vec<usize> = (0..mesh.num_triangles()).collect();
        order.reverse();
        order.swap(3, 17);
        shuffled.triangles = order.iter().map(|&k| mesh.triangles[k]).collect();
        let w2: Vec<f64> = order.iter().map(|&k| w[k]).collect();
        let a2 = assemble_weighted_stiffness(&shuffled, &w2).unwrap();
        assert_eq!(a, a2);
    }

    #[test]
    fn fully_constrained_returns_prescription() {
        let mesh = build_rect_mesh(1, 1, 1.0, 1.0, &Side::ALL).unwrap();
        let a = assemble_weighted_stiffness(&mesh, &[1.0, 1.0]).unwrap();
        let values: BTreeMap<usize, f64> = (0..4).map(|i| (i, i as f64 * 0.37 - 1.0)).collect();
        let sys = apply_dirichlet(SparseSystem::new(a, vec![0.0; 4]), &mesh, &values).unwrap();
        let x = solve_sparse(&sys, 1e-14, 100, None).unwrap();
        for (&i, &g) in &values {
            assert_eq!(x[i], g);
        }
    }

    #[test]
    fn interior_node_cannot_be_constrained() {
        let mesh = build_rect_mesh(2, 2, 1.0, 1.0, &Side::ALL).unwrap();
        let a = assemble_weighted_stiffness(&mesh, &vec![1.0; mesh.num_triangles()]).unwrap();
        let values = BTreeMap::from([(4usize, 1.0)]);
        assert!(matches!(
            apply_dirichlet(SparseSystem::new(a, vec![0.0; 9]), &mesh, &values),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn empty_constraint_is_identity() {
        let mesh = unit(3, &[Side::Left]);
        let sys = SparseSystem::new(assemble_mass(&mesh), vec![1.0; mesh.num_nodes()]);
        let out = apply_dirichlet(sys.clone(), &mesh, &BTreeMap::new()).unwrap();
        assert_eq!(sys, out);
    }

    #[test]
    fn laplace_reproduces_linear() {
        let mesh = unit(8, &[Side::Left, Side::Right]);
        let a = assemble_weighted_stiffness(&mesh, &vec![1.0; mesh.num_triangles()]).unwrap();
        let values: BTreeMap<usize, f64> = mesh
            .dirichlet_nodes()
            .into_iter()
            .map(|i| (i, mesh.nodes[i][0]))
            .collect();
        let sys = apply_dirichlet(SparseSystem::new(a, vec![0.0; mesh.num_nodes()]), &mesh, &values).unwrap();
        let x = solve_sparse(&sys, 1e-14, 1000, None).unwrap();
        for (i, p) in mesh.nodes.iter().enumerate() {
            assert!((x[i] - p[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn constraint_outside_dirichlet_rejected() {
        let mesh = unit(3, &[Side::Left]);
        let sys = SparseSystem::new(assemble_mass(&mesh), vec![0.0; mesh.num_nodes()]);
        let values = BTreeMap::from([(3usize, 1.0)]);
        assert!(matches!(
            apply_dirichlet(sys, &mesh, &values),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn identity_and_diagonal_solves() {
        let b = vec![1.0, -2.0, 3.5, 0.25];
        let x = solve_sparse(&SparseSystem::new(CsrMatrix::identity(4), b.clone()), 1e-14, 10, None).unwrap();
        assert_eq!(x, b);
        let d = [2.0, 0.5, 4.0, 10.0];
        let x = solve_sparse(&SparseSystem::new(CsrMatrix::from_diagonal(&d), b.clone()), 1e-14, 10, None).unwrap();
        for i in 0..4 {
            assert!((x[i] - b[i] / d[i]).abs() <= 1e-14 * (b[i] / d[i]).abs());
        }
    }

    #[test]
    fn random_spd_against_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 50;
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let spd = &g * g.transpose() + DMatrix::<f64>::identity(n, n) * (n as f64) * 0.1;
        let b = DVector::<f64>::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let reference = spd.clone().cholesky().unwrap().solve(&b);
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                triplets.push((i, j, spd[(i, j)]));
            }
        }
        let sys = SparseSystem::new(CsrMatrix::from_triplets(n, triplets), b.as_slice().to_vec());
        let x = solve_sparse(&sys, 1e-14, 1000, None).unwrap();
        let diff = x
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-8, "max diff {diff}");
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let mesh = unit(10, &[Side::Left]);
        let a = assemble_weighted_stiffness(&mesh, &vec![1.0; mesh.num_triangles()]).unwrap();
        let m = assemble_mass(&mesh);
        let sys = SparseSystem::new(
            CsrMatrix::linear_combination(&[(1.0, &a), (1e-3, &m)]),
            (0..mesh.num_nodes()).map(|i| (i as f64).sin()).collect(),
        );
        match solve_sparse(&sys, 1e-14, 2, None) {
            Err(Error::SolverDivergence { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-14);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
