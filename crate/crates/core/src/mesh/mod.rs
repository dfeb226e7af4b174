//! Admissible two-dimensional finite-volume meshes.
//!
//! A [`Mesh`] is a set of convex polygonal cells, each carrying an explicit
//! center point `x_K`. Edges are derived from the cell polygons: an edge
//! shared by two cells is interior, an edge owned by a single cell lies on
//! the boundary and must carry a Dirichlet or Neumann marker.
//!
//! For every edge the mesh stores the two-point distance `d_σ` (center to
//! center for interior edges, center to segment on the boundary), the
//! transmissibility `τ_σ = m(σ)/d_σ` and the measure of its dual diamond
//! cell. Admissibility (orthogonality of `x_K x_L` to `σ`) is not enforced
//! at construction; see [`admissibility`].

pub mod admissibility;
mod discrete;
mod field;
pub mod io;
mod structured;

use std::collections::HashMap;

use thiserror::Error;

use crate::linalg::LinearSolveError;

pub use admissibility::{check_admissibility, AdmissibilityReport, DEFAULT_ORTHOGONALITY_TOL};
pub use discrete::{diff, discrete_gradient, discrete_h1_norm, discrete_hminus1_norm, HMinusOneNorm};
pub use field::CellField;
pub use io::{load_mesh, save_mesh};
pub use structured::{build_structured_mesh, Rect, SideMarkers};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("malformed mesh: {0}")]
    Structure(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh is not admissible at edge {edge}: {reason}")]
    NotAdmissible { edge: usize, reason: String },
    #[error("edge {edge} is a Dirichlet edge but the field carries no trace values")]
    MissingTrace { edge: usize },
    #[error("field has {got} values, mesh has {expected} cells")]
    FieldSize { expected: usize, got: usize },
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boundary condition type carried by an exterior edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

impl BoundaryKind {
    pub fn marker(self) -> char {
        match self {
            BoundaryKind::Dirichlet => 'D',
            BoundaryKind::Neumann => 'N',
        }
    }
}

/// Topological role of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// `σ = K|L`; all oriented quantities point from `k` to `l`.
    Interior { k: usize, l: usize },
    /// Exterior edge on `Γ_D`; `slot` indexes Dirichlet trace arrays.
    Dirichlet { cell: usize, slot: usize },
    /// Exterior edge on `Γ_N`.
    Neumann { cell: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Vertex ids in counter-clockwise order.
    pub vertices: Vec<usize>,
    /// The two-point flux center `x_K`.
    pub center: Point,
    /// Barycenter of the polygon, used for midpoint quadrature.
    pub centroid: Point,
    pub measure: f64,
    pub diameter: f64,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, in the counter-clockwise order of the owning cell `K`.
    pub vertices: [usize; 2],
    pub kind: EdgeKind,
    pub measure: f64,
    /// `d_σ`.
    pub distance: f64,
    /// `τ_σ = m(σ)/d_σ`.
    pub transmissibility: f64,
    /// Unit normal, outward for the owning cell (so `n_KL` on interior edges).
    pub normal: Point,
    /// `m(T_KL)` for interior edges, `m(T_Kσ)` for exterior ones.
    pub dual_measure: f64,
}

impl Edge {
    /// The cell `K` from whose side oriented quantities are stored.
    pub fn owner(&self) -> usize {
        match self.kind {
            EdgeKind::Interior { k, .. } => k,
            EdgeKind::Dirichlet { cell, .. } | EdgeKind::Neumann { cell } => cell,
        }
    }

    pub fn is_interior(&self) -> bool {
        matches!(self.kind, EdgeKind::Interior { .. })
    }

    pub fn is_boundary(&self) -> bool {
        !self.is_interior()
    }

    pub fn boundary_kind(&self) -> Option<BoundaryKind> {
        match self.kind {
            EdgeKind::Interior { .. } => None,
            EdgeKind::Dirichlet { .. } => Some(BoundaryKind::Dirichlet),
            EdgeKind::Neumann { .. } => Some(BoundaryKind::Neumann),
        }
    }
}

/// Cell input for [`Mesh::from_parts`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub vertices: Vec<usize>,
    pub center: Point,
}

/// Boundary marker input for [`Mesh::from_parts`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub a: usize,
    pub b: usize,
    pub kind: BoundaryKind,
}

/// Immutable finite-volume mesh. See the module documentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<Cell>,
    edges: Vec<Edge>,
    dirichlet_edges: Vec<usize>,
    cell_specs: Vec<CellSpec>,
    boundary_specs: Vec<BoundarySpec>,
}

impl Mesh {
    /// Builds the edge structure and all derived geometry. Only structural
    /// problems are rejected here; use [`Mesh::validated`] or
    /// [`check_admissibility`] for the admissibility conditions.
    pub fn from_parts(
        vertices: Vec<Point>,
        cells: Vec<CellSpec>,
        boundary: Vec<BoundarySpec>,
    ) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::Structure("mesh has no cells".into()));
        }
        if let Some((i, _)) = vertices
            .iter()
            .enumerate()
            .find(|(_, p)| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(MeshError::InvalidGeometry(format!("vertex {i} is not finite")));
        }

        let mut built_cells = Vec::with_capacity(cells.len());
        for (id, spec) in cells.iter().enumerate() {
            if spec.vertices.len() < 3 {
                return Err(MeshError::Structure(format!("cell {id} has fewer than 3 vertices")));
            }
            if let Some(&v) = spec.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::Structure(format!("cell {id} references unknown vertex {v}")));
            }
            let poly: Vec<Point> = spec.vertices.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&poly);
            if !(area > 0.0) {
                return Err(MeshError::InvalidGeometry(format!(
                    "cell {id} has non-positive signed area {area:e} (vertices must be counter-clockwise)"
                )));
            }
            if !spec.center[0].is_finite() || !spec.center[1].is_finite() {
                return Err(MeshError::InvalidGeometry(format!("cell {id} center is not finite")));
            }
            built_cells.push(Cell {
                vertices: spec.vertices.clone(),
                center: spec.center,
                centroid: polygon_centroid(&poly, area),
                measure: area,
                diameter: polygon_diameter(&poly),
                edges: Vec::with_capacity(spec.vertices.len()),
            });
        }

        let mut markers: HashMap<(usize, usize), BoundaryKind> = HashMap::new();
        for spec in &boundary {
            if markers.insert(undirected(spec.a, spec.b), spec.kind).is_some() {
                return Err(MeshError::Structure(format!(
                    "boundary edge ({}, {}) is marked more than once",
                    spec.a, spec.b
                )));
            }
        }

        // (a, b) in owner orientation, owner, optional neighbour
        let mut slots: Vec<([usize; 2], usize, Option<usize>)> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for (id, cell) in built_cells.iter_mut().enumerate() {
            let m = cell.vertices.len();
            for j in 0..m {
                let a = cell.vertices[j];
                let b = cell.vertices[(j + 1) % m];
                if a == b {
                    return Err(MeshError::Structure(format!("cell {id} has a repeated vertex {a}")));
                }
                match lookup.get(&undirected(a, b)) {
                    None => {
                        lookup.insert(undirected(a, b), slots.len());
                        cell.edges.push(slots.len());
                        slots.push(([a, b], id, None));
                    }
                    Some(&e) => {
                        let slot = &mut slots[e];
                        if slot.2.is_some() {
                            return Err(MeshError::Structure(format!(
                                "edge ({a}, {b}) is shared by more than two cells"
                            )));
                        }
                        if slot.0 != [b, a] {
                            return Err(MeshError::Structure(format!(
                                "cells {} and {id} traverse edge ({a}, {b}) in the same direction",
                                slot.1
                            )));
                        }
                        slot.2 = Some(id);
                        cell.edges.push(e);
                    }
                }
            }
        }

        let mut edges = Vec::with_capacity(slots.len());
        let mut dirichlet_edges = Vec::new();
        let mut used_markers = 0usize;
        for (e, &([a, b], owner, other)) in slots.iter().enumerate() {
            let pa = vertices[a];
            let pb = vertices[b];
            let measure = dist(pa, pb);
            if !(measure > 0.0) {
                return Err(MeshError::InvalidGeometry(format!("edge {e} has zero length")));
            }
            let t = [(pb[0] - pa[0]) / measure, (pb[1] - pa[1]) / measure];
            let normal = [t[1], -t[0]];
            let xk = built_cells[owner].center;
            let (kind, distance, dual_measure) = match other {
                Some(l) => {
                    if markers.contains_key(&undirected(a, b)) {
                        return Err(MeshError::Structure(format!(
                            "interior edge ({a}, {b}) carries a boundary marker"
                        )));
                    }
                    let xl = built_cells[l].center;
                    let dual = signed_area(&[xk, pa, xl, pb]).abs();
                    (EdgeKind::Interior { k: owner, l }, dist(xk, xl), dual)
                }
                None => {
                    let kind = match markers.get(&undirected(a, b)) {
                        Some(k) => *k,
                        None => {
                            return Err(MeshError::Structure(format!(
                                "boundary edge ({a}, {b}) has no Dirichlet/Neumann marker"
                            )))
                        }
                    };
                    used_markers += 1;
                    let kind = match kind {
                        BoundaryKind::Dirichlet => {
                            dirichlet_edges.push(e);
                            EdgeKind::Dirichlet {
                                cell: owner,
                                slot: dirichlet_edges.len() - 1,
                            }
                        }
                        BoundaryKind::Neumann => EdgeKind::Neumann { cell: owner },
                    };
                    let dual = signed_area(&[xk, pa, pb]).abs();
                    (kind, point_segment_distance(xk, pa, pb), dual)
                }
            };
            edges.push(Edge {
                vertices: [a, b],
                kind,
                measure,
                distance,
                transmissibility: measure / distance,
                normal,
                dual_measure,
            });
        }
        if used_markers != markers.len() {
            return Err(MeshError::Structure(format!(
                "{} boundary markers do not match any exterior edge",
                markers.len() - used_markers
            )));
        }

        Ok(Self {
            vertices,
            cells: built_cells,
            edges,
            dirichlet_edges,
            cell_specs: cells,
            boundary_specs: boundary,
        })
    }

    /// Checks admissibility with tolerance `tol` and returns the mesh, or the
    /// offending edge.
    pub fn validated(self, tol: f64) -> Result<Self, MeshError> {
        let report = check_admissibility(&self, tol);
        if let Some(err) = report.to_error() {
            return Err(err);
        }
        Ok(self)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell(&self, k: usize) -> &Cell {
        &self.cells[k]
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids of the Dirichlet edges, indexed by trace slot.
    pub fn dirichlet_edges(&self) -> &[usize] {
        &self.dirichlet_edges
    }

    pub fn num_dirichlet(&self) -> usize {
        self.dirichlet_edges.len()
    }

    pub fn has_dirichlet(&self) -> bool {
        !self.dirichlet_edges.is_empty()
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_interior())
    }

    pub fn cell_specs(&self) -> &[CellSpec] {
        &self.cell_specs
    }

    pub fn boundary_specs(&self) -> &[BoundarySpec] {
        &self.boundary_specs
    }

    /// `m(Ω)` as the sum of cell measures.
    pub fn area(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    /// `h(T)`, the largest cell diameter.
    pub fn size(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    pub fn measures(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.measure).collect()
    }

    /// Midpoint of an edge.
    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].vertices;
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }
}

fn undirected(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Shoelace formula; positive for counter-clockwise polygons.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

fn polygon_centroid(poly: &[Point], area: f64) -> Point {
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    // shift to the first vertex to limit cancellation
    let o = poly[0];
    for i in 0..n {
        let p = [poly[i][0] - o[0], poly[i][1] - o[1]];
        let q = [poly[(i + 1) % n][0] - o[0], poly[(i + 1) % n][1] - o[1]];
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [o[0] + cx / (6.0 * area), o[1] + cy / (6.0 * area)]
}

fn polygon_diameter(poly: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for (i, &p) in poly.iter().enumerate() {
        for &q in &poly[i + 1..] {
            d = d.max(dist(p, q));
        }
    }
    d
}

/// Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Circumcenter of a triangle.
pub fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let bx = b[0] - a[0];
    let by = b[1] - a[1];
    let cx = c[0] - a[0];
    let cy = c[1] - a[1];
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_pair() -> Mesh {
        build_structured_mesh(2, 1, Rect::new(0.0, 0.0, 2.0, 1.0), SideMarkers::all(BoundaryKind::Neumann)).unwrap()
    }

    #[test]
    fn one_by_two_has_unit_transmissibility() {
        let mesh = unit_square_pair();
        let interior: Vec<_> = mesh.interior_edges().collect();
        assert_eq!(interior.len(), 1);
        let (_, e) = interior[0];
        assert_eq!(e.measure, 1.0);
        assert_eq!(e.distance, 1.0);
        assert_eq!(e.transmissibility, 1.0);
        assert_eq!(e.normal, [1.0, 0.0]);
        assert_eq!(e.dual_measure, 0.5);
    }

    #[test]
    fn single_cell_has_four_boundary_edges() {
        let mesh = build_structured_mesh(1, 1, Rect::new(0.0, 0.0, 1.0, 1.0), SideMarkers::all(BoundaryKind::Dirichlet)).unwrap();
        assert_eq!(mesh.num_edges(), 4);
        assert_eq!(mesh.interior_edges().count(), 0);
        assert_eq!(mesh.num_dirichlet(), 4);
    }

    #[test]
    fn two_by_two_unit_square() {
        let mesh = build_structured_mesh(2, 2, Rect::new(0.0, 0.0, 1.0, 1.0), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
        let interior: Vec<_> = mesh.interior_edges().map(|(_, e)| e).collect();
        assert_eq!(interior.len(), 4);
        for e in interior {
            assert_eq!(e.measure, 0.5);
            assert_eq!(e.distance, 0.5);
            assert_eq!(e.transmissibility, 1.0);
        }
    }

    #[test]
    fn unmarked_boundary_edge_is_rejected() {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let cells = vec![CellSpec {
            vertices: vec![0, 1, 2],
            center: [0.5, 0.5],
        }];
        let boundary = vec![
            BoundarySpec { a: 0, b: 1, kind: BoundaryKind::Neumann },
            BoundarySpec { a: 1, b: 2, kind: BoundaryKind::Neumann },
        ];
        assert!(matches!(
            Mesh::from_parts(vertices, cells, boundary),
            Err(MeshError::Structure(_))
        ));
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let vertices = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let cells = vec![CellSpec {
            vertices: vec![0, 1, 2],
            center: [0.5, 0.5],
        }];
        assert!(matches!(
            Mesh::from_parts(vertices, cells, vec![]),
            Err(MeshError::InvalidGeometry(_))
        ));
    }

    #[test]
    fn circumcenter_of_right_triangle_is_hypotenuse_midpoint() {
        let c = circumcenter([0.0, 0.0], [2.0, 0.0], [0.0, 2.0]);
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn centroid_and_area_of_square() {
        let mesh = build_structured_mesh(1, 1, Rect::new(1.0, 2.0, 3.0, 3.0), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
        let c = mesh.cell(0);
        assert_eq!(c.measure, 2.0);
        assert_eq!(c.centroid, [2.0, 2.5]);
        assert!((c.diameter - 5f64.sqrt()).abs() < 1e-15);
    }
}
