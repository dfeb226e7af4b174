//! Discrete differences, norms and the dual-mesh gradient.

use super::{CellField, EdgeKind, Mesh, MeshError, Point};
use crate::linalg::{CsrMatrix, SparseLu};

/// `D_{K,σ}(v) = v_{K,σ} − v_K`, seen from the owning cell of `edge`.
pub fn diff(field: &CellField, mesh: &Mesh, edge: usize) -> Result<f64, MeshError> {
    let v = &field.values;
    match mesh.edge(edge).kind {
        EdgeKind::Interior { k, l } => Ok(v[l] - v[k]),
        EdgeKind::Dirichlet { cell, slot } => {
            let traces = field.traces.as_ref().ok_or(MeshError::MissingTrace { edge })?;
            Ok(traces[slot] - v[cell])
        }
        EdgeKind::Neumann { .. } => Ok(0.0),
    }
}

/// Squared discrete H¹ norm: interior-edge jumps plus the L² part.
pub(crate) fn h1_norm_squared(values: &[f64], mesh: &Mesh) -> f64 {
    let jumps: f64 = mesh
        .interior_edges()
        .map(|(_, e)| match e.kind {
            EdgeKind::Interior { k, l } => e.transmissibility * (values[k] - values[l]).powi(2),
            _ => unreachable!(),
        })
        .sum();
    let l2: f64 = values.iter().zip(mesh.cells()).map(|(v, c)| c.measure * v * v).sum();
    jumps + l2
}

pub fn discrete_h1_norm(field: &CellField, mesh: &Mesh) -> f64 {
    h1_norm_squared(&field.values, mesh).sqrt()
}

/// Factorized Gram matrix of the discrete H¹ inner product, for repeated
/// evaluation of the dual norm on one mesh.
#[derive(Debug, Clone)]
pub struct HMinusOneNorm {
    measures: Vec<f64>,
    lu: SparseLu,
}

impl HMinusOneNorm {
    pub fn new(mesh: &Mesh) -> Result<Self, MeshError> {
        let n = mesh.num_cells();
        let mut triplets = Vec::with_capacity(n + 4 * mesh.num_edges());
        for (k, c) in mesh.cells().iter().enumerate() {
            triplets.push((k, k, c.measure));
        }
        for (_, e) in mesh.interior_edges() {
            if let EdgeKind::Interior { k, l } = e.kind {
                let t = e.transmissibility;
                triplets.extend([(k, k, t), (l, l, t), (k, l, -t), (l, k, -t)]);
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &triplets);
        Ok(Self {
            measures: mesh.measures(),
            lu: SparseLu::factorize(&a)?,
        })
    }

    /// `sup { ∫ v w : ‖w‖_{1,T} = 1 } = (vᵀ M A⁻¹ M v)^{1/2}`.
    pub fn norm(&self, values: &[f64]) -> Result<f64, MeshError> {
        if values.len() != self.measures.len() {
            return Err(MeshError::FieldSize {
                expected: self.measures.len(),
                got: values.len(),
            });
        }
        let mv: Vec<f64> = values.iter().zip(&self.measures).map(|(v, m)| v * m).collect();
        let y = self.lu.solve(&mv)?;
        let q: f64 = mv.iter().zip(&y).map(|(a, b)| a * b).sum();
        Ok(q.max(0.0).sqrt())
    }
}

pub fn discrete_hminus1_norm(field: &CellField, mesh: &Mesh) -> Result<f64, MeshError> {
    field.check(mesh)?;
    HMinusOneNorm::new(mesh)?.norm(&field.values)
}

/// Dual-mesh gradient, one vector per edge: `m(σ)(v_L − v_K)/m(T_KL) · n_KL`
/// on interior diamonds and zero on boundary diamonds.
pub fn discrete_gradient(field: &CellField, mesh: &Mesh) -> Vec<Point> {
    mesh.edges()
        .iter()
        .map(|e| match e.kind {
            EdgeKind::Interior { k, l } => {
                let s = e.measure * (field.values[l] - field.values[k]) / e.dual_measure;
                [s * e.normal[0], s * e.normal[1]]
            }
            _ => [0.0, 0.0],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, BoundaryKind, Rect, SideMarkers};

    fn pair() -> Mesh {
        build_structured_mesh(2, 1, Rect::new(0.0, 0.0, 2.0, 1.0), SideMarkers::left_right_dirichlet()).unwrap()
    }

    fn interior_edge(mesh: &Mesh) -> usize {
        mesh.interior_edges().next().unwrap().0
    }

    #[test]
    fn diff_cases() {
        let mesh = pair();
        let f = CellField::with_traces(vec![0.2, 0.5], vec![1.0, 1.0]);
        assert!((diff(&f, &mesh, interior_edge(&mesh)).unwrap() - 0.3).abs() < 1e-15);
        let neumann = mesh.edges().iter().position(|e| e.boundary_kind() == Some(BoundaryKind::Neumann)).unwrap();
        assert_eq!(diff(&f, &mesh, neumann).unwrap(), 0.0);
        let d = mesh.dirichlet_edges()[0];
        let owner = mesh.edge(d).owner();
        assert!((diff(&f, &mesh, d).unwrap() - (1.0 - f.values[owner])).abs() < 1e-15);
        let no_trace = CellField::new(vec![0.2, 0.5]);
        assert!(matches!(diff(&no_trace, &mesh, d), Err(MeshError::MissingTrace { .. })));
    }

    #[test]
    fn dirichlet_diff_against_cell_value_point_two() {
        let mesh = build_structured_mesh(1, 1, Rect::unit(), SideMarkers::all(BoundaryKind::Dirichlet)).unwrap();
        let f = CellField::with_traces(vec![0.2], vec![1.0; 4]);
        assert!((diff(&f, &mesh, 0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn h1_norm_examples() {
        let mesh = pair();
        assert_eq!(discrete_h1_norm(&CellField::new(vec![0.0, 0.0]), &mesh), 0.0);
        let v = discrete_h1_norm(&CellField::new(vec![0.0, 1.0]), &mesh);
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
        let c = -1.7;
        let v = discrete_h1_norm(&CellField::new(vec![c, c]), &mesh);
        assert!((v - mesh.area().sqrt() * c.abs()).abs() < 1e-14);
    }

    #[test]
    fn hminus1_on_two_cells_matches_brute_force() {
        let mesh = pair();
        let v = CellField::new(vec![1.0, -1.0]);
        let computed = discrete_hminus1_norm(&v, &mesh).unwrap();
        // Brute force: maximize ∫ v w over the ellipse ‖w‖_{1,T} = 1,
        // w = (w0, w1), ‖w‖² = (w0 − w1)² + w0² + w1².
        let mut best = f64::MIN;
        let steps = 200_000;
        for s in 0..steps {
            let th = 2.0 * std::f64::consts::PI * s as f64 / steps as f64;
            let (w0, w1) = (th.cos(), th.sin());
            let n = ((w0 - w1).powi(2) + w0 * w0 + w1 * w1).sqrt();
            best = best.max((w0 - w1) / n);
        }
        assert!((computed - best).abs() < 1e-9, "{computed} vs {best}");
        // closed form: A = [[2, -1], [-1, 2]], A⁻¹v = v/3
        assert!((computed - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gradient_examples() {
        let mesh = pair();
        let g = discrete_gradient(&CellField::new(vec![0.0, 1.0]), &mesh);
        let e = interior_edge(&mesh);
        assert_eq!(g[e], [2.0, 0.0]);
        let g = discrete_gradient(&CellField::new(vec![3.0, 3.0]), &mesh);
        assert!(g.iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn gradient_of_linear_field_is_exact_on_interior_diamonds() {
        let mesh = build_structured_mesh(6, 4, Rect::new(0.0, 0.0, 3.0, 1.0), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
        let a = [0.7, -1.3];
        let f = CellField::from_centers(&mesh, |x| a[0] * x[0] + a[1] * x[1]);
        for (e, g) in discrete_gradient(&f, &mesh).iter().enumerate() {
            if !mesh.edge(e).is_interior() {
                continue;
            }
            // The two-point gradient recovers the normal component; on
            // diamonds of a uniform grid with half-area weighting that is
            // the full projection onto n_KL scaled by 2.
            let n = mesh.edge(e).normal;
            let proj = a[0] * n[0] + a[1] * n[1];
            assert!((g[0] - 2.0 * proj * n[0]).abs() < 1e-12);
            assert!((g[1] - 2.0 * proj * n[1]).abs() < 1e-12);
        }
    }
}
