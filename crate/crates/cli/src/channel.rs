//! Triangulations of the hourglass channel.
//!
//! Two reservoirs on `[0, 1/3]` and `[2/3, 1]` are joined by a neck of
//! height `2/15`; the reservoirs taper linearly from the full height `2/3`
//! at the vertical ends to the neck height. The vertical ends are Dirichlet
//! boundaries, everything else is Neumann.
//!
//! Every level is obtained from a fixed acute base triangulation by regular
//! refinement (each triangle split into four similar ones through its edge
//! midpoints), so all triangles stay acute, circumcenters lie strictly
//! inside, and the circumcenter mesh is admissible. Level `L` is the base
//! refined `L + 2` times, which gives `62 · 4^{L+2}` cells. Children are
//! numbered consecutively, so cell `c` of level `L + 1` lies in cell
//! `c / 4` of level `L`.

use std::collections::HashMap;

use crossflux_core::mesh::{circumcenter, BoundaryKind, BoundarySpec, CellSpec, Mesh, MeshError, Point};

/// Outline in drawing units, counter-clockwise from the origin.
pub const OUTLINE: [Point; 8] = [[0.0, 0.0], [1.5, 1.2], [3.0, 1.2], [4.5, 0.0], [4.5, 3.0], [3.0, 1.8], [1.5, 1.8], [0.0, 3.0]];

/// Drawing units per scaled unit.
pub const SCALE: f64 = 4.5;

/// Outline segments (`OUTLINE[k] → OUTLINE[k+1]`) carrying Dirichlet data.
const DIRICHLET_SEGMENTS: [usize; 2] = [3, 7];

/// Base boundary points as (segment, parameter along the segment).
const BOUNDARY: [(usize, f64); 34] = [
    (0, 0.0), (0, 0.212), (0, 0.416), (0, 0.6582),
    (1, 0.0), (1, 0.1689), (1, 0.5843),
    (2, 0.0), (2, 0.343), (2, 0.5877), (2, 0.7826),
    (3, 0.0), (3, 0.1621), (3, 0.2834), (3, 0.5031), (3, 0.7245), (3, 0.8435),
    (4, 0.0), (4, 0.2243), (4, 0.4076), (4, 0.6522),
    (5, 0.0), (5, 0.4157), (5, 0.8311),
    (6, 0.0), (6, 0.3454), (6, 0.589), (6, 0.7694),
    (7, 0.0), (7, 0.1486), (7, 0.2669), (7, 0.4958), (7, 0.7154), (7, 0.8351),
];

const INTERIOR: [Point; 15] = [
    [0.2166, 0.6258], [4.2841, 0.6095], [0.398, 0.9494], [4.1045, 0.9444], [0.6797, 1.4987],
    [1.136, 1.5], [1.6572, 1.5], [2.2807, 1.5], [2.9039, 1.5], [3.3662, 1.5],
    [3.8244, 1.4982], [0.3921, 2.0507], [4.0992, 2.0819], [0.2171, 2.4056], [4.2807, 2.3811],
];

#[rustfmt::skip]
const TRIANGLES: [[usize; 3]; 62] = [
    [37, 14, 44], [8, 37, 44], [9, 37, 8], [14, 46, 44], [46, 20, 44], [45, 31, 38], [25, 45, 38], [12, 10, 11],
    [31, 36, 38], [5, 6, 41], [43, 8, 44], [43, 7, 8], [20, 43, 44], [26, 45, 25], [46, 19, 20], [15, 46, 14],
    [45, 30, 31], [37, 13, 14], [1, 33, 0], [32, 36, 31], [3, 36, 2], [36, 3, 38], [3, 39, 38], [39, 3, 4],
    [39, 25, 38], [39, 24, 25], [22, 23, 41], [21, 43, 20], [18, 16, 17], [13, 35, 12], [35, 13, 37], [35, 37, 9],
    [10, 35, 9], [12, 35, 10], [34, 32, 33], [32, 34, 36], [36, 34, 2], [34, 1, 2], [1, 34, 33], [40, 5, 41],
    [23, 40, 41], [5, 40, 4], [40, 23, 24], [40, 39, 4], [39, 40, 24], [43, 42, 7], [21, 42, 43], [6, 42, 41],
    [7, 42, 6], [42, 22, 41], [42, 21, 22], [29, 27, 28], [16, 48, 15], [15, 48, 46], [48, 19, 46], [19, 48, 18],
    [48, 16, 18], [47, 29, 30], [47, 30, 45], [26, 47, 45], [27, 47, 26], [29, 47, 27],
];

/// Number of regular refinements of the base mesh at level 0.
pub const BASE_REFINEMENTS: u32 = 2;

/// Cell count of the channel mesh at `level`.
pub fn channel_cell_count(level: u32) -> usize {
    TRIANGLES.len() * 4usize.pow(level + BASE_REFINEMENTS)
}

struct Triangulation {
    points: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    /// Boundary edges with their marker, in no particular order.
    boundary: Vec<(usize, usize, BoundaryKind)>,
}

fn base() -> Triangulation {
    let mut points: Vec<Point> = BOUNDARY
        .iter()
        .map(|&(s, t)| {
            let (a, b) = (OUTLINE[s], OUTLINE[(s + 1) % OUTLINE.len()]);
            [(a[0] + t * (b[0] - a[0])) / SCALE, (a[1] + t * (b[1] - a[1])) / SCALE]
        })
        .collect();
    points.extend(INTERIOR.iter().map(|p| [p[0] / SCALE, p[1] / SCALE]));
    let nb = BOUNDARY.len();
    let boundary = (0..nb)
        .map(|j| {
            let kind = if DIRICHLET_SEGMENTS.contains(&BOUNDARY[j].0) { BoundaryKind::Dirichlet } else { BoundaryKind::Neumann };
            (j, (j + 1) % nb, kind)
        })
        .collect();
    Triangulation { points, triangles: TRIANGLES.to_vec(), boundary }
}

fn refine(t: &Triangulation) -> Triangulation {
    let mut points = t.points.clone();
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, points: &mut Vec<Point>| -> usize {
        let key = (a.min(b), a.max(b));
        *mids.entry(key).or_insert_with(|| {
            let (p, q) = (points[a], points[b]);
            points.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            points.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * t.triangles.len());
    for &[a, b, c] in &t.triangles {
        let ab = mid(a, b, &mut points);
        let bc = mid(b, c, &mut points);
        let ca = mid(c, a, &mut points);
        triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    let mut boundary = Vec::with_capacity(2 * t.boundary.len());
    for &(a, b, kind) in &t.boundary {
        let m = mid(a, b, &mut points);
        boundary.push((a, m, kind));
        boundary.push((m, b, kind));
    }
    Triangulation { points, triangles, boundary }
}

/// The channel mesh at refinement `level`, with circumcenters as cell
/// centers.
pub fn channel_mesh(level: u32) -> Result<Mesh, MeshError> {
    let mut t = base();
    for _ in 0..level + BASE_REFINEMENTS {
        t = refine(&t);
    }
    let cells = t
        .triangles
        .iter()
        .map(|&[a, b, c]| CellSpec {
            vertices: vec![a, b, c],
            center: circumcenter(t.points[a], t.points[b], t.points[c]),
        })
        .collect();
    let boundary = t.boundary.iter().map(|&(a, b, kind)| BoundarySpec { a, b, kind }).collect();
    Mesh::from_parts(t.points, cells, boundary)
}

/// Index of the level-`coarse` cell containing cell `fine_cell` of level
/// `coarse + levels_up`.
pub fn ancestor(fine_cell: usize, levels_up: u32) -> usize {
    fine_cell >> (2 * levels_up)
}

/// Largest angle of the base triangulation, in degrees.
pub fn base_max_angle() -> f64 {
    let t = base();
    let mut worst = 0.0f64;
    for tri in &t.triangles {
        for i in 0..3 {
            let p = t.points[tri[i]];
            let q = t.points[tri[(i + 1) % 3]];
            let r = t.points[tri[(i + 2) % 3]];
            let (u, v) = ([q[0] - p[0], q[1] - p[1]], [r[0] - p[0], r[1] - p[1]]);
            let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
            worst = worst.max(cos.acos().to_degrees());
        }
    }
    worst
}
