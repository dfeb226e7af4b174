//! Convergence studies on nested mesh families.

use crossflux_core::solver::{run, StepControl};
use crossflux_core::{Mesh, State};
use log::info;
use serde::Serialize;

use crate::channel::ancestor;
use crate::error::CliError;
use crate::scenario::{MeshSpec, ScenarioFile};

/// How the cells of a finer level map onto a coarser one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nesting {
    /// Regular 4-way refinement with children stored consecutively.
    Refined,
    /// Structured grid with `nx × ny` cells at the coarse level.
    Structured { nx: usize },
}

impl Nesting {
    pub fn of(spec: &MeshSpec) -> Result<Self, CliError> {
        match spec {
            MeshSpec::Channel { .. } => Ok(Nesting::Refined),
            MeshSpec::Structured(s) => Ok(Nesting::Structured { nx: s.nx }),
            MeshSpec::File(_) => Err(CliError::Study("mesh files are not nested".into())),
        }
    }

    /// Coarse cell containing fine cell `fine`, `levels_up` levels below.
    /// `coarse_nx` is the coarse row length for structured grids.
    pub fn parent(self, fine: usize, levels_up: u32, coarse_nx: usize) -> usize {
        match self {
            Nesting::Refined => ancestor(fine, levels_up),
            Nesting::Structured { .. } => {
                let fine_nx = coarse_nx << levels_up;
                let (i, j) = (fine % fine_nx, fine / fine_nx);
                (j >> levels_up) * coarse_nx + (i >> levels_up)
            }
        }
    }

    fn row_length(self, level: u32) -> usize {
        match self {
            Nesting::Refined => 0,
            Nesting::Structured { nx } => nx << level,
        }
    }
}

/// Mean of `fine` over each coarse cell.
pub fn aggregate(fine: &[f64], fine_mesh: &Mesh, coarse_mesh: &Mesh, nesting: Nesting, coarse_level: u32, levels_up: u32) -> Result<Vec<f64>, CliError> {
    if fine_mesh.num_cells() != coarse_mesh.num_cells() << (2 * levels_up) {
        return Err(CliError::Study(format!(
            "{} fine cells cannot refine {} coarse cells {levels_up} times",
            fine_mesh.num_cells(),
            coarse_mesh.num_cells()
        )));
    }
    let nx = nesting.row_length(coarse_level);
    let mut sums = vec![0.0; coarse_mesh.num_cells()];
    for (f, cell) in fine_mesh.cells().iter().enumerate() {
        sums[nesting.parent(f, levels_up, nx)] += cell.measure * fine[f];
    }
    for (s, cell) in sums.iter_mut().zip(coarse_mesh.cells()) {
        *s /= cell.measure;
    }
    Ok(sums)
}

/// `Σ_K m(K) |a_K − b_K|`.
pub fn l1_distance(a: &[f64], b: &[f64], mesh: &Mesh) -> f64 {
    mesh.cells().iter().zip(a.iter().zip(b)).map(|(c, (x, y))| c.measure * (x - y).abs()).sum()
}

/// Least-squares slope of `log e` against `log h`.
pub fn fit_slope(h: &[f64], e: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(e).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Runs the scenario on `mesh` and returns the states at `steps` (sorted).
/// If the run stops earlier, later requests get the final state.
pub fn states_at(scenario: &ScenarioFile, mesh: &Mesh, steps: &[usize]) -> Result<Vec<State>, CliError> {
    let problem = scenario.instantiate(mesh)?;
    let last = *steps.iter().max().unwrap_or(&0);
    let mut out: Vec<Option<State>> = steps.iter().map(|&s| (s == 0).then(|| problem.initial.clone())).collect();
    if last > 0 {
        let mut time = scenario.time_options();
        time.max_steps = Some(last);
        time.t_end = None;
        let summary = run(&problem.initial, mesh, &problem.config, &problem.bc, &time, &scenario.newton.options(), |rec| {
            for (slot, &s) in out.iter_mut().zip(steps) {
                if s == rec.state.step {
                    *slot = Some(rec.state.clone());
                }
            }
            StepControl::Continue
        })?;
        for slot in out.iter_mut().filter(|s| s.is_none()) {
            *slot = Some(summary.final_state.clone());
        }
    }
    Ok(out.into_iter().map(|s| s.expect("filled")).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelError {
    pub level: u32,
    pub cells: usize,
    pub h: f64,
    /// `[snapshot][species]`.
    pub errors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub steps: Vec<usize>,
    pub species: Vec<String>,
    pub reference_level: u32,
    pub levels: Vec<LevelError>,
    /// `[snapshot][species]`.
    pub slopes: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,cells,h");
        for step in &self.steps {
            for name in &self.species {
                s += &format!(",err_{name}_k{step}");
            }
        }
        s.push('\n');
        for l in &self.levels {
            s += &format!("{},{},{:e}", l.level, l.cells, l.h);
            for row in &l.errors {
                for e in row {
                    s += &format!(",{e:e}");
                }
            }
            s.push('\n');
        }
        s += "slope,,";
        for row in &self.slopes {
            for v in row {
                s += &format!(",{v:.4}");
            }
        }
        s.push('\n');
        s
    }
}

/// Runs the scenario on every study level and the reference level and
/// compares the concentrations at the snapshot steps in the discrete L¹
/// norm, with the reference averaged onto the coarse cells.
pub fn convergence_study(scenario: &ScenarioFile, levels: &[u32], reference: u32, steps: &[usize]) -> Result<ConvergenceTable, CliError> {
    if levels.is_empty() || steps.is_empty() {
        return Err(CliError::Study("need at least one level and one snapshot step".into()));
    }
    if let Some(&l) = levels.iter().find(|&&l| l >= reference) {
        return Err(CliError::Study(format!("level {l} is not coarser than the reference level {reference}")));
    }
    let nesting = Nesting::of(&scenario.mesh)?;
    let ref_mesh = scenario.mesh.at_level(reference)?.build()?;
    info!("reference level {reference}: {} cells", ref_mesh.num_cells());
    let ref_states = states_at(scenario, &ref_mesh, steps)?;
    let mut rows = Vec::new();
    for &level in levels {
        let mesh = scenario.mesh.at_level(level)?.build()?;
        info!("level {level}: {} cells", mesh.num_cells());
        let states = states_at(scenario, &mesh, steps)?;
        let mut errors = Vec::new();
        for (state, reference_state) in states.iter().zip(&ref_states) {
            let mut row = Vec::new();
            for (ui, ri) in state.u.iter().zip(&reference_state.u) {
                let agg = aggregate(ri, &ref_mesh, &mesh, nesting, level, reference - level)?;
                row.push(l1_distance(ui, &agg, &mesh));
            }
            errors.push(row);
        }
        rows.push(LevelError { level, cells: mesh.num_cells(), h: mesh.size(), errors });
    }
    let n = scenario.num_species();
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let slopes = (0..steps.len())
        .map(|s| (0..n).map(|i| fit_slope(&hs, &rows.iter().map(|r| r.errors[s][i]).collect::<Vec<_>>())).collect())
        .collect();
    Ok(ConvergenceTable {
        steps: steps.to_vec(),
        species: scenario.species.iter().map(|s| s.name.clone()).collect(),
        reference_level: reference,
        levels: rows,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::channel_mesh;
    use crossflux_core::mesh::{build_structured_mesh, Rect, SideMarkers};

    #[test]
    fn slope_of_exact_power_law() {
        let h = [0.4, 0.2, 0.1];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powf(1.5)).collect();
        assert!((fit_slope(&h, &e) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn structured_parent_matches_geometry() {
        let sides = SideMarkers::left_right_dirichlet();
        let coarse = build_structured_mesh(3, 2, Rect::unit(), sides).unwrap();
        let fine = build_structured_mesh(12, 8, Rect::unit(), sides).unwrap();
        for (f, cell) in fine.cells().iter().enumerate() {
            let p = Nesting::Structured { nx: 3 }.parent(f, 2, 3);
            let c = coarse.cell(p).center;
            assert!((cell.center[0] - c[0]).abs() < 1.0 / 6.0 && (cell.center[1] - c[1]).abs() < 0.25);
        }
    }

    #[test]
    fn aggregation_preserves_mass() {
        let coarse = channel_mesh(0).unwrap();
        let fine = channel_mesh(1).unwrap();
        let u: Vec<f64> = fine.cells().iter().map(|c| (7.0 * c.centroid[0]).sin() + c.centroid[1]).collect();
        let agg = aggregate(&u, &fine, &coarse, Nesting::Refined, 0, 1).unwrap();
        let m_fine: f64 = fine.cells().iter().zip(&u).map(|(c, v)| c.measure * v).sum();
        let m_coarse: f64 = coarse.cells().iter().zip(&agg).map(|(c, v)| c.measure * v).sum();
        assert!((m_fine - m_coarse).abs() < 1e-12);
        assert!(aggregate(&u, &fine, &fine, Nesting::Refined, 1, 1).is_err());
    }
}
