//! Admissibility diagnostics for two-point flux meshes.

use super::{dist, point_segment_distance, EdgeKind, Mesh, MeshError};

/// Default bound on `|cos θ|`, θ the angle between `x_K x_L` and `σ`.
pub const DEFAULT_ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub passed: bool,
    pub tolerance: f64,
    /// Largest `|cos θ|` over interior edges (0 for a perfectly orthogonal mesh).
    pub max_orthogonality_defect: f64,
    pub worst_edge: Option<usize>,
    /// Measured regularity constant `min d(x_K, σ) / d_σ`.
    pub zeta: f64,
    pub zeta_edge: Option<usize>,
    /// Interior edges whose centers are not ordered along `n_KL` (or coincide).
    pub misoriented_edges: Vec<usize>,
}

impl AdmissibilityReport {
    /// The first violation as an error, if any.
    pub fn to_error(&self) -> Option<MeshError> {
        if let Some(&edge) = self.misoriented_edges.first() {
            return Some(MeshError::NotAdmissible {
                edge,
                reason: "cell centers are not ordered along the edge normal".into(),
            });
        }
        if self.max_orthogonality_defect > self.tolerance {
            return Some(MeshError::NotAdmissible {
                edge: self.worst_edge.unwrap_or(0),
                reason: format!(
                    "orthogonality defect {:e} exceeds tolerance {:e}",
                    self.max_orthogonality_defect, self.tolerance
                ),
            });
        }
        if !(self.zeta > 0.0) {
            return Some(MeshError::NotAdmissible {
                edge: self.zeta_edge.unwrap_or(0),
                reason: format!("regularity constant zeta = {} is not positive", self.zeta),
            });
        }
        None
    }
}

/// Measures the orthogonality defect and the regularity constant `ζ`.
/// Never fails; the verdict is in [`AdmissibilityReport::passed`].
pub fn check_admissibility(mesh: &Mesh, tol: f64) -> AdmissibilityReport {
    let mut max_defect = 0.0f64;
    let mut worst_edge = None;
    let mut zeta = f64::INFINITY;
    let mut zeta_edge = None;
    let mut misoriented = Vec::new();

    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = edge.vertices;
        let pa = mesh.vertices()[a];
        let pb = mesh.vertices()[b];
        let owners: Vec<usize> = match edge.kind {
            EdgeKind::Interior { k, l } => {
                let xk = mesh.cell(k).center;
                let xl = mesh.cell(l).center;
                let c = [xl[0] - xk[0], xl[1] - xk[1]];
                let len = dist(xk, xl);
                let along_normal = c[0] * edge.normal[0] + c[1] * edge.normal[1];
                if !(len > 0.0) || !(along_normal > 0.0) {
                    misoriented.push(e);
                } else {
                    let t = [(pb[0] - pa[0]) / edge.measure, (pb[1] - pa[1]) / edge.measure];
                    let defect = (c[0] * t[0] + c[1] * t[1]).abs() / len;
                    if defect > max_defect {
                        max_defect = defect;
                        worst_edge = Some(e);
                    }
                }
                vec![k, l]
            }
            EdgeKind::Dirichlet { cell, .. } | EdgeKind::Neumann { cell } => vec![cell],
        };
        for k in owners {
            let d = point_segment_distance(mesh.cell(k).center, pa, pb);
            let ratio = if edge.distance > 0.0 { d / edge.distance } else { 0.0 };
            if ratio < zeta {
                zeta = ratio;
                zeta_edge = Some(e);
            }
        }
    }

    let passed = misoriented.is_empty() && max_defect <= tol && zeta > 0.0;
    AdmissibilityReport {
        passed,
        tolerance: tol,
        max_orthogonality_defect: max_defect,
        worst_edge,
        zeta,
        zeta_edge,
        misoriented_edges: misoriented,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, BoundaryKind, BoundarySpec, CellSpec, Rect, SideMarkers};

    #[test]
    fn uniform_rectangles_pass_with_zeta_one_half() {
        let mesh = build_structured_mesh(4, 3, Rect::new(0.0, 0.0, 2.0, 1.0), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
        let report = check_admissibility(&mesh, DEFAULT_ORTHOGONALITY_TOL);
        assert!(report.passed);
        assert_eq!(report.max_orthogonality_defect, 0.0);
        assert!((report.zeta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_cell_uses_boundary_edges_only() {
        let mesh = build_structured_mesh(1, 1, Rect::unit(), SideMarkers::all(BoundaryKind::Dirichlet)).unwrap();
        let report = check_admissibility(&mesh, DEFAULT_ORTHOGONALITY_TOL);
        assert!(report.passed);
        assert_eq!(report.zeta, 1.0);
        assert!(report.worst_edge.is_none());
    }

    #[test]
    fn rotated_center_fails_orthogonality() {
        // Two unit squares; rotate x_L about x_K by 1e-3 rad.
        let theta: f64 = 1e-3;
        let xk = [0.5, 0.5];
        let xl = [xk[0] + theta.cos(), xk[1] + theta.sin()];
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [0.0, 1.0]];
        let cells = vec![
            CellSpec { vertices: vec![0, 1, 4, 5], center: xk },
            CellSpec { vertices: vec![1, 2, 3, 4], center: xl },
        ];
        let boundary = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]
            .iter()
            .map(|&(a, b)| BoundarySpec { a, b, kind: BoundaryKind::Neumann })
            .collect();
        let mesh = Mesh::from_parts(vertices, cells, boundary).unwrap();
        let report = check_admissibility(&mesh, 1e-10);
        assert!(!report.passed);
        assert!((report.max_orthogonality_defect - theta.sin()).abs() < 1e-12);
        assert!(report.to_error().is_some());
    }
}
