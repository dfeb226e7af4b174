//! Legacy ASCII VTK output.

use std::io::Write;
use std::path::Path;

use crossflux_core::{Mesh, ModelConfig, State};

use crate::error::CliError;

fn cell_type(num_vertices: usize) -> u8 {
    match num_vertices {
        3 => 5,
        4 => 9,
        _ => 7,
    }
}

/// Writes the mesh polygons with cell data `u_0, u_1, …, u_n, Phi, u_imm`
/// in that order. Cells appear in mesh order; floats are printed in the
/// shortest form that parses back to the same value.
pub fn write_vtk(mut w: impl Write, state: &State, mesh: &Mesh, config: &ModelConfig) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "crossflux step {} time {:e}", state.step, state.time)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.vertices().len())?;
    for p in mesh.vertices() {
        writeln!(w, "{:e} {:e} 0", p[0], p[1])?;
    }
    let cells = mesh.cells();
    let size: usize = cells.iter().map(|c| c.vertices.len() + 1).sum();
    writeln!(w, "CELLS {} {size}", cells.len())?;
    for c in cells {
        write!(w, "{}", c.vertices.len())?;
        for v in &c.vertices {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for c in cells {
        writeln!(w, "{}", cell_type(c.vertices.len()))?;
    }
    let n = state.num_species();
    writeln!(w, "CELL_DATA {}", cells.len())?;
    writeln!(w, "FIELD FieldData {}", n + 3)?;
    let mut array = |name: &str, values: &[f64]| -> std::io::Result<()> {
        writeln!(w, "{name} 1 {} double", values.len())?;
        for v in values {
            writeln!(w, "{v:e}")?;
        }
        Ok(())
    };
    array("u_0", &state.solvent(config))?;
    for i in 0..n {
        array(&format!("u_{}", i + 1), &state.u[i])?;
    }
    array("Phi", &state.phi)?;
    array("u_imm", &config.immobile)?;
    Ok(())
}

pub fn write_vtk_snapshot(state: &State, mesh: &Mesh, config: &ModelConfig, path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_vtk(&mut w, state, mesh, config).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// Reads back the cell-data arrays of a file written by [`write_vtk`].
pub fn read_cell_data(text: &str) -> Result<Vec<(String, Vec<f64>)>, String> {
    let mut lines = text.lines().skip_while(|l| !l.starts_with("FIELD "));
    let header = lines.next().ok_or("no FIELD section")?;
    let count: usize = header.split_whitespace().nth(2).and_then(|s| s.parse().ok()).ok_or("bad FIELD header")?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let head = lines.next().ok_or("truncated array header")?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        let [name, _, len, _] = parts[..] else { return Err(format!("bad array header `{head}`")) };
        let len: usize = len.parse().map_err(|_| format!("bad length in `{head}`"))?;
        let values = (0..len)
            .map(|_| lines.next().ok_or("truncated array")?.trim().parse::<f64>().map_err(|_| "bad value"))
            .collect::<Result<Vec<_>, _>>()?;
        out.push((name.to_string(), values));
    }
    Ok(out)
}
