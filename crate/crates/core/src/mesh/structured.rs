use super::{BoundaryKind, BoundarySpec, CellSpec, Mesh, MeshError};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }
}

/// Boundary marker for each side of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideMarkers {
    pub left: BoundaryKind,
    pub right: BoundaryKind,
    pub bottom: BoundaryKind,
    pub top: BoundaryKind,
}

impl SideMarkers {
    pub fn all(kind: BoundaryKind) -> Self {
        Self {
            left: kind,
            right: kind,
            bottom: kind,
            top: kind,
        }
    }

    /// Dirichlet on the vertical sides, Neumann on the horizontal ones.
    pub fn left_right_dirichlet() -> Self {
        Self {
            left: BoundaryKind::Dirichlet,
            right: BoundaryKind::Dirichlet,
            bottom: BoundaryKind::Neumann,
            top: BoundaryKind::Neumann,
        }
    }
}

/// Uniform `nx × ny` rectangular mesh with cell centers at the cell
/// midpoints. Cells are numbered row by row from the bottom-left corner.
pub fn build_structured_mesh(nx: usize, ny: usize, rect: Rect, markers: SideMarkers) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidGeometry(format!("cell counts must be positive, got {nx}x{ny}")));
    }
    let finite = [rect.x0, rect.x1, rect.y0, rect.y1].iter().all(|v| v.is_finite());
    if !finite || !(rect.x1 > rect.x0) || !(rect.y1 > rect.y0) {
        return Err(MeshError::InvalidGeometry(format!(
            "degenerate rectangle [{}, {}] x [{}, {}]",
            rect.x0, rect.x1, rect.y0, rect.y1
        )));
    }
    let xs: Vec<f64> = (0..=nx)
        .map(|i| if i == nx { rect.x1 } else { rect.x0 + (rect.x1 - rect.x0) * i as f64 / nx as f64 })
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| if j == ny { rect.y1 } else { rect.y0 + (rect.y1 - rect.y0) * j as f64 / ny as f64 })
        .collect();
    let vid = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(CellSpec {
                vertices: vec![vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)],
                center: [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])],
            });
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push(BoundarySpec { a: vid(i, 0), b: vid(i + 1, 0), kind: markers.bottom });
        boundary.push(BoundarySpec { a: vid(i + 1, ny), b: vid(i, ny), kind: markers.top });
    }
    for j in 0..ny {
        boundary.push(BoundarySpec { a: vid(0, j + 1), b: vid(0, j), kind: markers.left });
        boundary.push(BoundarySpec { a: vid(nx, j), b: vid(nx, j + 1), kind: markers.right });
    }
    Mesh::from_parts(vertices, cells, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_rectangle_is_rejected() {
        let r = build_structured_mesh(2, 2, Rect::new(0.0, 0.0, 0.0, 1.0), SideMarkers::all(BoundaryKind::Neumann));
        assert!(matches!(r, Err(MeshError::InvalidGeometry(_))));
        let r = build_structured_mesh(0, 2, Rect::unit(), SideMarkers::all(BoundaryKind::Neumann));
        assert!(matches!(r, Err(MeshError::InvalidGeometry(_))));
    }

    #[test]
    fn dirichlet_slots_follow_markers() {
        let mesh = build_structured_mesh(3, 2, Rect::unit(), SideMarkers::left_right_dirichlet()).unwrap();
        assert_eq!(mesh.num_dirichlet(), 4);
        for &e in mesh.dirichlet_edges() {
            let mid = mesh.edge_midpoint(e);
            assert!(mid[0] == 0.0 || mid[0] == 1.0);
        }
    }

    #[test]
    fn areas_and_dual_cells_tile_the_rectangle() {
        let mesh = build_structured_mesh(5, 3, Rect::new(-1.0, 0.0, 2.0, 0.5), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
        let dual: f64 = mesh.edges().iter().map(|e| e.dual_measure).sum();
        assert!((mesh.area() - 1.5).abs() < 1e-12);
        assert!((dual - 1.5).abs() < 1e-12);
        for e in mesh.edges() {
            assert!((e.transmissibility * e.distance - e.measure).abs() <= 1e-15 * e.measure);
        }
    }
}
