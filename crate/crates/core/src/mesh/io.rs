//! Plain-text mesh format.
//!
//! ```text
//! # crossflux-mesh v1
//! vertices <n>
//! <x> <y>
//! cells <m>
//! <k> <v_0> ... <v_{k-1}> <cx> <cy>
//! boundary <b>
//! <va> <vb> D|N
//! ```
//!
//! Blank lines and lines starting with `#` after the header are ignored.
//! Vertex lists are counter-clockwise; `cx cy` is the cell center `x_K`.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryKind, BoundarySpec, CellSpec, Mesh, MeshError, Point};

pub const HEADER: &str = "# crossflux-mesh v1";

pub fn write_mesh_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{HEADER}").unwrap();
    writeln!(s, "vertices {}", mesh.vertices().len()).unwrap();
    for p in mesh.vertices() {
        writeln!(s, "{:?} {:?}", p[0], p[1]).unwrap();
    }
    writeln!(s, "cells {}", mesh.cell_specs().len()).unwrap();
    for c in mesh.cell_specs() {
        write!(s, "{}", c.vertices.len()).unwrap();
        for v in &c.vertices {
            write!(s, " {v}").unwrap();
        }
        writeln!(s, " {:?} {:?}", c.center[0], c.center[1]).unwrap();
    }
    writeln!(s, "boundary {}", mesh.boundary_specs().len()).unwrap();
    for b in mesh.boundary_specs() {
        writeln!(s, "{} {} {}", b.a, b.b, b.kind.marker()).unwrap();
    }
    s
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((i + 1, t));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), MeshError> {
        self.next_content().ok_or_else(|| MeshError::Parse {
            line: self.last,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn section(&mut self, name: &str) -> Result<usize, MeshError> {
        let (line, t) = self.expect(name)?;
        let mut it = t.split_whitespace();
        if it.next() != Some(name) {
            return Err(perr(line, format!("expected section `{name} <count>`")));
        }
        let count = parse_num(line, it.next(), "count")?;
        if it.next().is_some() {
            return Err(perr(line, "trailing tokens after section count"));
        }
        Ok(count)
    }
}

fn perr(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} `{tok}`")))
}

pub fn parse_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut raw = text.lines().enumerate();
    match raw.next() {
        Some((_, first)) if first.trim() == HEADER => {}
        _ => return Err(perr(1, format!("missing header `{HEADER}`"))),
    }
    let mut lines = Lines { inner: raw, last: 1 };

    let nv = lines.section("vertices")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, t) = lines.expect("a vertex")?;
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(perr(line, "vertex lines hold exactly two coordinates"));
        }
        vertices.push([parse_num(line, Some(toks[0]), "x")?, parse_num(line, Some(toks[1]), "y")?]);
    }

    let nc = lines.section("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (line, t) = lines.expect("a cell")?;
        let toks: Vec<&str> = t.split_whitespace().collect();
        let k: usize = parse_num(line, toks.first().copied(), "vertex count")?;
        if toks.len() != k + 3 {
            return Err(perr(line, format!("cell line needs {} tokens, found {}", k + 3, toks.len())));
        }
        let vs = toks[1..=k]
            .iter()
            .map(|s| parse_num(line, Some(s), "vertex id"))
            .collect::<Result<Vec<usize>, _>>()?;
        if let Some(&v) = vs.iter().find(|&&v| v >= nv) {
            return Err(perr(line, format!("vertex id {v} out of range")));
        }
        let center = [parse_num(line, Some(toks[k + 1]), "cx")?, parse_num(line, Some(toks[k + 2]), "cy")?];
        cells.push(CellSpec { vertices: vs, center });
    }

    let nb = lines.section("boundary")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, t) = lines.expect("a boundary edge")?;
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(perr(line, "boundary lines read `<va> <vb> D|N`"));
        }
        let a: usize = parse_num(line, Some(toks[0]), "vertex id")?;
        let b: usize = parse_num(line, Some(toks[1]), "vertex id")?;
        if a >= nv || b >= nv {
            return Err(perr(line, "vertex id out of range"));
        }
        let kind = match toks[2] {
            "D" => BoundaryKind::Dirichlet,
            "N" => BoundaryKind::Neumann,
            other => return Err(perr(line, format!("unknown boundary marker `{other}`"))),
        };
        boundary.push(BoundarySpec { a, b, kind });
    }
    if let Some((line, _)) = lines.next_content() {
        return Err(perr(line, "unexpected content after boundary section"));
    }
    Mesh::from_parts(vertices, cells, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, check_admissibility, circumcenter, Rect, SideMarkers};

    fn triangle_pair(center: impl Fn(Point, Point, Point) -> Point) -> String {
        let v = [[0.0, 0.0], [2.0, 0.0], [0.8, 1.5], [1.3, -1.4]];
        let c0 = center(v[0], v[1], v[2]);
        let c1 = center(v[0], v[3], v[1]);
        format!(
            "{HEADER}\nvertices 4\n0 0\n2 0\n0.8 1.5\n1.3 -1.4\ncells 2\n3 0 1 2 {:?} {:?}\n3 0 3 1 {:?} {:?}\n\
             boundary 4\n1 2 N\n2 0 D\n0 3 N\n3 1 D\n",
            c0[0], c0[1], c1[0], c1[1]
        )
    }

    #[test]
    fn triangle_pair_with_circumcenters_is_admissible() {
        let mesh = parse_mesh(&triangle_pair(circumcenter)).unwrap();
        assert_eq!(mesh.num_cells(), 2);
        let report = check_admissibility(&mesh, 1e-10);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn triangle_pair_with_centroids_is_rejected() {
        let centroid = |a: Point, b: Point, c: Point| [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let mesh = parse_mesh(&triangle_pair(centroid)).unwrap();
        let report = check_admissibility(&mesh, 1e-10);
        assert!(!report.passed);
        assert!(matches!(mesh.validated(1e-10), Err(MeshError::NotAdmissible { .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let mesh = build_structured_mesh(3, 2, Rect::new(0.1, -0.3, 1.7, 0.9), SideMarkers::left_right_dirichlet()).unwrap();
        let again = parse_mesh(&write_mesh_string(&mesh)).unwrap();
        assert_eq!(mesh, again);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = format!("{HEADER}\nvertices 2\n0 0\n1 x\n");
        match parse_mesh(&bad) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_mesh("vertices 0\n"), Err(MeshError::Parse { line: 1, .. })));
        let truncated = format!("{HEADER}\nvertices 3\n0 0\n");
        assert!(matches!(parse_mesh(&truncated), Err(MeshError::Parse { .. })));
    }

    #[test]
    fn unknown_marker_is_rejected() {
        let text = triangle_pair(circumcenter).replace("1 2 N", "1 2 R");
        assert!(matches!(parse_mesh(&text), Err(MeshError::Parse { .. })));
    }
}
