//! Structured P1 triangulations of an axis-aligned rectangle.
//!
//! Nodes are numbered row-major (`j * (nx + 1) + i`), every cell is split
//! along its lower-left to upper-right diagonal, and the boundary is tagged
//! side by side as either Dirichlet or Neumann.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        match s {
            "left" => Some(Side::Left),
            "right" => Some(Side::Right),
            "bottom" => Some(Side::Bottom),
            "top" => Some(Side::Top),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "DIRICHLET",
            BoundaryTag::Neumann => "NEUMANN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    pub side: Side,
}

/// Area and constant basis-function gradients of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    /// Signed area; positive for counterclockwise vertex order.
    pub area: f64,
    pub grads: [[f64; 2]; 3],
    pub barycenter: [f64; 2],
}

impl TriangleGeometry {
    /// Gradient of the P1 interpolant with the given vertex values.
    pub fn gradient(&self, values: [f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (v, grad) in values.iter().zip(&self.grads) {
            g[0] += v * grad[0];
            g[1] += v * grad[1];
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub lx: f64,
    pub ly: f64,
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_geometry(&self, k: usize) -> TriangleGeometry {
        let [a, b, c] = self.triangles[k];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let area = 0.5 * det;
        // grad of lambda_i is the rotated opposite edge over 2|K|
        let grads = if det != 0.0 {
            [
                [(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det],
                [(pc[1] - pa[1]) / det, (pa[0] - pc[0]) / det],
                [(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det],
            ]
        } else {
            [[0.0; 2]; 3]
        };
        TriangleGeometry {
            area,
            grads,
            barycenter: [
                (pa[0] + pb[0] + pc[0]) / 3.0,
                (pa[1] + pb[1] + pc[1]) / 3.0,
            ],
        }
    }

    pub fn geometries(&self) -> Vec<TriangleGeometry> {
        (0..self.num_triangles())
            .map(|k| self.triangle_geometry(k))
            .collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles())
            .map(|k| self.triangle_geometry(k).area)
            .sum()
    }

    pub fn edge_length(&self, edge: &BoundaryEdge) -> f64 {
        let [a, b] = edge.nodes;
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    pub fn boundary_length(&self, tag: Option<BoundaryTag>) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| tag.map_or(true, |t| e.tag == t))
            .map(|e| self.edge_length(e))
            .sum()
    }

    /// Nodes lying on at least one Dirichlet-tagged edge, ascending.
    pub fn dirichlet_nodes(&self) -> BTreeSet<usize> {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::Dirichlet)
            .flat_map(|e| e.nodes)
            .collect()
    }

    /// Nodes on Dirichlet edges of the given side.
    pub fn dirichlet_nodes_on(&self, side: Side) -> BTreeSet<usize> {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::Dirichlet && e.side == side)
            .flat_map(|e| e.nodes)
            .collect()
    }

    pub fn dirichlet_sides(&self) -> BTreeSet<Side> {
        self.boundary_edges
            .iter()
            .filter(|e| e.tag == BoundaryTag::Dirichlet)
            .map(|e| e.side)
            .collect()
    }

    /// Largest triangle diameter.
    pub fn h_max(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let mut d: f64 = 0.0;
                for i in 0..3 {
                    let (p, q) = (self.nodes[t[i]], self.nodes[t[(i + 1) % 3]]);
                    d = d.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Plain-text export: a `nodes N` section with `x y` lines, a
    /// `triangles T` section with `i j k` lines and a `boundary_edges B`
    /// section with `i j TAG` lines.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "nodes {}", self.nodes.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.16e} {:.16e}", p[0], p[1])?;
        }
        writeln!(w, "triangles {}", self.triangles.len())?;
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "boundary_edges {}", self.boundary_edges.len())?;
        for e in &self.boundary_edges {
            writeln!(w, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.as_str())?;
        }
        Ok(())
    }
}

/// Uniform `nx × ny` grid on `[0, lx] × [0, ly]`.
pub fn build_rect_mesh(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dirichlet_sides: &[Side],
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Config(format!(
            "cell counts must be at least 1 (got nx = {nx}, ny = {ny})"
        )));
    }
    if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
        return Err(Error::Config(format!(
            "domain extents must be positive (got lx = {lx}, ly = {ly})"
        )));
    }
    if dirichlet_sides.is_empty() {
        return Err(Error::Config(
            "the Dirichlet boundary must be non-empty".to_string(),
        ));
    }

    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([i as f64 * lx / nx as f64, j as f64 * ly / ny as f64]);
        }
    }
    // pin the far sides to the extents exactly
    for j in 0..=ny {
        nodes[id(nx, j)][0] = lx;
    }
    for i in 0..=nx {
        nodes[id(i, ny)][1] = ly;
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    let tag_of = |side: Side| {
        if dirichlet_sides.contains(&side) {
            BoundaryTag::Dirichlet
        } else {
            BoundaryTag::Neumann
        }
    };
    // counterclockwise loop: bottom, right, top, left
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(i, 0), id(i + 1, 0)],
            tag: tag_of(Side::Bottom),
            side: Side::Bottom,
        });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(nx, j), id(nx, j + 1)],
            tag: tag_of(Side::Right),
            side: Side::Right,
        });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(i + 1, ny), id(i, ny)],
            tag: tag_of(Side::Top),
            side: Side::Top,
        });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(0, j + 1), id(0, j)],
            tag: tag_of(Side::Left),
            side: Side::Left,
        });
    }

    Ok(Mesh {
        nodes,
        triangles,
        boundary_edges,
        lx,
        ly,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveArea { triangle: usize, area: f64 },
    IndexOutOfRange { triangle: usize },
    EdgeMultiplicity { edge: [usize; 2], count: usize },
    BoundaryMismatch { edge: [usize; 2] },
    BoundaryLoop(String),
    EmptyDirichlet,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveArea { triangle, area } => {
                write!(f, "triangle {triangle} has non-positive signed area {area:e}")
            }
            Violation::IndexOutOfRange { triangle } => {
                write!(f, "triangle {triangle} references a missing node")
            }
            Violation::EdgeMultiplicity { edge, count } => write!(
                f,
                "edge ({}, {}) is shared by {count} triangles",
                edge[0], edge[1]
            ),
            Violation::BoundaryMismatch { edge } => write!(
                f,
                "boundary edge ({}, {}) does not match a single-triangle edge",
                edge[0], edge[1]
            ),
            Violation::BoundaryLoop(msg) => write!(f, "boundary loop: {msg}"),
            Violation::EmptyDirichlet => f.write_str("Dirichlet edge set is empty"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_loop_violation(&self) -> bool {
        self.violations
            .iter()
            .any(|v| matches!(v, Violation::BoundaryLoop(_)))
    }
}

fn key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub fn validate(mesh: &Mesh) -> ValidationReport {
    let mut violations = Vec::new();
    let n = mesh.num_nodes();

    let mut edge_count: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for (k, t) in mesh.triangles.iter().enumerate() {
        if t.iter().any(|&i| i >= n) {
            violations.push(Violation::IndexOutOfRange { triangle: k });
            continue;
        }
        let area = mesh.triangle_geometry(k).area;
        if !(area > 0.0) {
            violations.push(Violation::NonPositiveArea { triangle: k, area });
        }
        for i in 0..3 {
            *edge_count.entry(key(t[i], t[(i + 1) % 3])).or_default() += 1;
        }
    }
    for (edge, &count) in &edge_count {
        if count > 2 {
            violations.push(Violation::EdgeMultiplicity { edge: *edge, count });
        }
    }

    let single: BTreeSet<[usize; 2]> = edge_count
        .iter()
        .filter(|(_, &c)| c == 1)
        .map(|(e, _)| *e)
        .collect();
    let mut listed: BTreeMap<[usize; 2], usize> = BTreeMap::new();
    for e in &mesh.boundary_edges {
        *listed.entry(key(e.nodes[0], e.nodes[1])).or_default() += 1;
    }
    for e in listed.keys() {
        if !single.contains(e) {
            violations.push(Violation::BoundaryMismatch { edge: *e });
        }
    }
    for e in &single {
        if !listed.contains_key(e) {
            violations.push(Violation::BoundaryLoop(format!(
                "edge ({}, {}) lies on the boundary but is not tagged",
                e[0], e[1]
            )));
        }
    }
    for (e, &c) in &listed {
        if c > 1 {
            violations.push(Violation::BoundaryLoop(format!(
                "edge ({}, {}) listed {c} times",
                e[0], e[1]
            )));
        }
    }

    // every boundary node has degree two and the edges form one cycle
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in &mesh.boundary_edges {
        adjacency.entry(e.nodes[0]).or_default().push(e.nodes[1]);
        adjacency.entry(e.nodes[1]).or_default().push(e.nodes[0]);
    }
    if let Some((&bad, nbrs)) = adjacency.iter().find(|(_, v)| v.len() != 2) {
        violations.push(Violation::BoundaryLoop(format!(
            "node {bad} has {} incident boundary edges",
            nbrs.len()
        )));
    } else if let Some((&start, _)) = adjacency.iter().next() {
        let mut visited = 1;
        let (mut prev, mut cur) = (start, adjacency[&start][0]);
        while cur != start && visited <= adjacency.len() {
            let nbrs = &adjacency[&cur];
            let next = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
            prev = cur;
            cur = next;
            visited += 1;
        }
        if visited != adjacency.len() {
            violations.push(Violation::BoundaryLoop(format!(
                "boundary splits into several loops ({visited} of {} nodes reached)",
                adjacency.len()
            )));
        }
    } else {
        violations.push(Violation::BoundaryLoop("no boundary edges".to_string()));
    }

    if !mesh
        .boundary_edges
        .iter()
        .any(|e| e.tag == BoundaryTag::Dirichlet)
    {
        violations.push(Violation::EmptyDirichlet);
    }

    ValidationReport { violations }
}
