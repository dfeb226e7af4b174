//! Scenario execution and run artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use crossflux_core::diagnostics::relative_entropy;
use crossflux_core::diagnostics::RowBuilder;
use crossflux_core::mesh::io::write_mesh_string;
use crossflux_core::solver::{run, StepControl};
use crossflux_core::{DiagnosticsReport, Mesh, ModelConfig, RunSummary, State, StepSolver};
use log::{info, warn};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::scenario::{Problem, ScenarioFile};
use crate::vtk::write_vtk_snapshot;

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub version: &'static str,
    pub mesh_sha256: String,
    pub config_sha256: String,
    pub num_cells: usize,
    pub num_species: usize,
    pub threads: usize,
    pub stop_reason: String,
    pub steps: usize,
    pub final_time: f64,
    pub last_change: Option<f64>,
    pub error: Option<String>,
    pub snapshots: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub report: DiagnosticsReport,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the scenario stored at `path`.
pub fn run_scenario(path: &Path) -> Result<RunOutcome, CliError> {
    let (scenario, bytes) = ScenarioFile::load(path)?;
    run_loaded(&scenario, &bytes)
}

/// Runs a parsed scenario; `config_bytes` is the text hashed into the
/// manifest.
pub fn run_loaded(scenario: &ScenarioFile, config_bytes: &[u8]) -> Result<RunOutcome, CliError> {
    let mesh = scenario.build_mesh()?;
    let problem = scenario.instantiate(&mesh)?;
    let out_dir = scenario.output.dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    info!("{}: {} cells, {} species", scenario.name, mesh.num_cells(), scenario.num_species());

    let Problem { config, bc, initial } = &problem;
    let time = scenario.time_options();
    let mut manifest = Manifest {
        name: scenario.name.clone(),
        version: env!("CARGO_PKG_VERSION"),
        mesh_sha256: sha256_hex(write_mesh_string(&mesh).as_bytes()),
        config_sha256: sha256_hex(config_bytes),
        num_cells: mesh.num_cells(),
        num_species: config.num_species(),
        threads: rayon::current_num_threads(),
        stop_reason: String::new(),
        steps: 0,
        final_time: 0.0,
        last_change: None,
        error: None,
        snapshots: Vec::new(),
    };

    let mut report = DiagnosticsReport::new(config.num_species());
    let mut rows = RowBuilder::new(&mesh, config)?;
    report.rows.push(rows.initial(initial));
    let mut history = vec![initial.clone()];
    let mut failure: Option<CliError> = None;
    let snapshot = |state: &State, manifest: &mut Manifest| -> Result<(), CliError> {
        let name = format!("snapshot_{:06}.vtk", state.step);
        write_vtk_snapshot(state, &mesh, config, &out_dir.join(&name))?;
        manifest.snapshots.push(name);
        Ok(())
    };
    if scenario.output.wants(0) {
        snapshot(initial, &mut manifest)?;
    }

    let flags = scenario.flags;
    let result = run(initial, &mesh, config, bc, &time, &scenario.newton.options(), |rec| {
        let row = match rows.step(rec.previous, rec.state, rec.dt) {
            Ok(row) => row,
            Err(e) => {
                failure = Some(e.into());
                return StepControl::Abort("diagnostics failed".into());
            }
        };
        if flags.entropy_check {
            match (row.entropy_defect, report.rows.last().and_then(|r| r.entropy)) {
                (Some(defect), Some(h_prev)) => {
                    let bound = flags.entropy_tol * (1.0 + h_prev.abs() / rec.dt);
                    if defect > bound {
                        let msg = format!("entropy defect {defect:e} exceeds {bound:e} at step {}", rec.state.step);
                        failure = Some(CliError::Structure(msg.clone()));
                        return StepControl::Abort(msg);
                    }
                }
                _ => warn!("entropy inequality not available for this model at step {}", rec.state.step),
            }
        }
        report.rows.push(row);
        history.push(rec.state.clone());
        if scenario.output.wants(rec.state.step) {
            if let Err(e) = snapshot(rec.state, &mut manifest) {
                failure = Some(e);
                return StepControl::Abort("snapshot failed".into());
            }
        }
        StepControl::Continue
    });

    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            let err = failure.take().unwrap_or(CliError::Solver(e));
            manifest.stop_reason = "error".into();
            manifest.steps = history.len() - 1;
            manifest.final_time = history.last().map_or(0.0, |s| s.time);
            manifest.error = Some(err.to_string());
            write_diagnostics(&out_dir, &report)?;
            write_manifest(&out_dir, &manifest)?;
            return Err(err);
        }
    };

    // relative entropy with respect to the last computed level
    let last = &summary.final_state;
    for (row, state) in report.rows.iter_mut().zip(&history) {
        row.relative_entropy = relative_entropy(state, last, &mesh, config).ok();
    }
    manifest.stop_reason = summary.stop_reason.as_str().into();
    manifest.steps = summary.steps;
    manifest.final_time = last.time;
    manifest.last_change = Some(summary.last_change);
    write_diagnostics(&out_dir, &report)?;
    write_final_state(&out_dir.join("final_state.csv"), last, &mesh, config)?;
    write_manifest(&out_dir, &manifest)?;
    info!("{}: stopped ({}) after {} steps", scenario.name, manifest.stop_reason, summary.steps);
    Ok(RunOutcome { summary, report, manifest, out_dir })
}

fn write_diagnostics(dir: &Path, report: &DiagnosticsReport) -> Result<(), CliError> {
    let path = dir.join("diagnostics.csv");
    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    report.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

/// One row per cell: center, `u_0, …, u_n` and `Φ`.
pub fn write_final_state(path: &Path, state: &State, mesh: &Mesh, config: &ModelConfig) -> Result<(), CliError> {
    let io = |e| CliError::io(path, e);
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    let n = state.num_species();
    let mut header = vec!["cell".to_string(), "x".into(), "y".into(), "u_0".into()];
    header.extend((1..=n).map(|i| format!("u_{i}")));
    header.push("phi".into());
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    let u0 = state.solvent(config);
    for (k, cell) in mesh.cells().iter().enumerate() {
        write!(w, "{k},{:e},{:e},{:e}", cell.center[0], cell.center[1], u0[k]).map_err(io)?;
        for ui in &state.u {
            write!(w, ",{:e}", ui[k]).map_err(io)?;
        }
        writeln!(w, ",{:e}", state.phi[k]).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// ∞-norm of the stationary residual (the implicit Euler residual without
/// the time derivative) at `state`.
pub fn stationary_residual(state: &State, mesh: &Mesh, problem: &Problem) -> Result<f64, CliError> {
    let solver = StepSolver::new(mesh, &problem.config, &problem.bc, Default::default())?;
    let x = state.to_unknowns();
    let r = solver.residual(&x, &x, f64::INFINITY);
    Ok(r.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}
