//! Scenario files.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "name": "channel",
//!   "species": [
//!     { "name": "Ca", "z": 2, "D": 1.0, "init": "connect_boundary", "bc": { "left": 0.05, "right": 0.05 } }
//!   ],
//!   "potential": { "bc": { "left": 0.0, "right": -1.0 } },
//!   "beta": 1.0,
//!   "lambda2": 0.05,
//!   "background_charge": 0.0,
//!   "immobile": { "type": "oxygen_ramp", "u_max": 0.845 },
//!   "time": { "dt": 1e-3, "steady_tol": 1e-12, "max_steps": 5000 },
//!   "newton": { "abs_tol": 1e-10, "jacobian_reuse": true },
//!   "mesh": { "channel": { "level": 0 } },
//!   "flags": { "drift_enabled": true, "entropy_check": false },
//!   "output": { "dir": "out", "snapshot_steps": [50, 1400], "stride": 0 }
//! }
//! ```
//!
//! Boundary values are either a number or `{left, right}`, interpolated
//! linearly in `x` across the mesh. Initial values are a number, a
//! `{left, right}` pair, or `"connect_boundary"`, the linear profile joining
//! the two boundary values.

use std::path::{Path, PathBuf};

use crossflux_core::mesh::{build_structured_mesh, load_mesh, Rect, SideMarkers};
use crossflux_core::model::{initial_state, oxygen_max_concentration, oxygen_profile};
use crossflux_core::{BoundaryData, BoundaryKind, InitialProfile, Mesh, ModelConfig, NewtonOptions, Species, State, TimeLoopOptions};
use serde::{Deserialize, Serialize};

use crate::channel::channel_mesh;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub species: Vec<SpeciesSpec>,
    #[serde(default)]
    pub potential: PotentialSpec,
    pub beta: f64,
    pub lambda2: f64,
    #[serde(default)]
    pub background_charge: f64,
    #[serde(default)]
    pub immobile: Option<ImmobileSpec>,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub newton: NewtonSpec,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub flags: Flags,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub name: String,
    pub z: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub init: InitSpec,
    pub bc: Profile,
}

/// A value that is constant or linear in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Linear { left: f64, right: f64 },
}

impl Profile {
    pub fn ends(self) -> (f64, f64) {
        match self {
            Profile::Constant(c) => (c, c),
            Profile::Linear { left, right } => (left, right),
        }
    }

    fn at(self, x: f64, x0: f64, x1: f64) -> f64 {
        let (a, b) = self.ends();
        if a == b {
            a
        } else {
            a + (b - a) * (x - x0) / (x1 - x0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKeyword {
    ConnectBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Keyword(InitKeyword),
    Profile(Profile),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default = "zero_profile")]
    pub bc: Profile,
}

fn zero_profile() -> Profile {
    Profile::Constant(0.0)
}

impl Default for Profile {
    fn default() -> Self {
        zero_profile()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImmobileSpec {
    /// Confined oxygen with charge −½ along the neck.
    OxygenRamp {
        #[serde(default = "oxygen_max_concentration")]
        u_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default = "default_steady_tol")]
    pub steady_tol: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_steady_tol() -> f64 {
    1e-12
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { dt: default_dt(), t_end: None, max_steps: None, steady_tol: default_steady_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSpec {
    pub abs_tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub min_step: f64,
    pub projection: bool,
    pub jacobian_reuse: bool,
    pub reuse_contraction: f64,
}

impl Default for NewtonSpec {
    fn default() -> Self {
        let d = NewtonOptions::default();
        Self {
            abs_tol: d.abs_tol,
            max_iter: d.max_iter,
            damping: d.backtrack,
            min_step: d.min_step,
            projection: d.projection,
            jacobian_reuse: d.jacobian_reuse,
            reuse_contraction: d.reuse_contraction,
        }
    }
}

impl NewtonSpec {
    pub fn options(&self) -> NewtonOptions {
        NewtonOptions {
            abs_tol: self.abs_tol,
            max_iter: self.max_iter,
            backtrack: self.damping,
            min_step: self.min_step,
            projection: self.projection,
            jacobian_reuse: self.jacobian_reuse,
            reuse_contraction: self.reuse_contraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    File(PathBuf),
    Structured(StructuredSpec),
    Channel { level: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Markers {
    LeftRightDirichlet,
    AllDirichlet,
    AllNeumann,
}

impl Markers {
    fn sides(self) -> SideMarkers {
        match self {
            Markers::LeftRightDirichlet => SideMarkers::left_right_dirichlet(),
            Markers::AllDirichlet => SideMarkers::all(BoundaryKind::Dirichlet),
            Markers::AllNeumann => SideMarkers::all(BoundaryKind::Neumann),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredSpec {
    pub nx: usize,
    pub ny: usize,
    /// `[x0, y0, x1, y1]`.
    #[serde(default = "unit_rect")]
    pub rect: [f64; 4],
    #[serde(default = "default_markers")]
    pub markers: Markers,
}

fn unit_rect() -> [f64; 4] {
    [0.0, 0.0, 1.0, 1.0]
}

fn default_markers() -> Markers {
    Markers::LeftRightDirichlet
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    pub drift_enabled: bool,
    /// Abort with a structure violation when the discrete entropy inequality
    /// fails by more than `entropy_tol`.
    pub entropy_check: bool,
    pub entropy_tol: f64,
}

impl Default for Flags {
    fn default() -> Self {
        Self { drift_enabled: true, entropy_check: false, entropy_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub snapshot_steps: Vec<usize>,
    /// Additional snapshot every `stride` steps; 0 disables.
    pub stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), snapshot_steps: vec![50, 1400], stride: 0 }
    }
}

impl OutputSpec {
    pub fn wants(&self, step: usize) -> bool {
        self.snapshot_steps.contains(&step) || (self.stride > 0 && step.is_multiple_of(self.stride))
    }
}

/// Parses a scenario, reporting the offending field path with line and
/// column.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        CliError::Config(format!("{} (field `{}`, line {} column {})", inner, e.path(), inner.line(), inner.column()))
    })?;
    file.check()?;
    Ok(file)
}

impl ScenarioFile {
    /// Reads a scenario; relative mesh and output paths are taken relative
    /// to the file.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut file = parse_scenario(text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let MeshSpec::File(p) = &mut file.mesh {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if file.output.dir.is_relative() {
            file.output.dir = base.join(&file.output.dir);
        }
        Ok((file, bytes))
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |field: String, msg: &str| Err(CliError::Config(format!("field `{field}`: {msg}")));
        if self.species.is_empty() {
            return bad("species".into(), "at least one species is required");
        }
        for (i, s) in self.species.iter().enumerate() {
            if !s.z.is_finite() {
                return bad(format!("species[{i}].z"), "charge must be a finite number");
            }
            if !(s.d > 0.0) || !s.d.is_finite() {
                return bad(format!("species[{i}].D"), "diffusion coefficient must be positive");
            }
            let (a, b) = s.bc.ends();
            if !(a >= 0.0 && b >= 0.0) {
                return bad(format!("species[{i}].bc"), "boundary concentrations must be nonnegative");
            }
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return bad("beta".into(), "must be positive");
        }
        if !(self.lambda2 > 0.0) || !self.lambda2.is_finite() {
            return bad("lambda2".into(), "must be positive");
        }
        if !(self.time.dt > 0.0) || !self.time.dt.is_finite() {
            return bad("time.dt".into(), "must be positive");
        }
        if let Some(ImmobileSpec::OxygenRamp { u_max }) = self.immobile {
            if !(0.0..1.0).contains(&u_max) {
                return bad("immobile.u_max".into(), "must lie in [0, 1)");
            }
        }
        self.newton.options().validate().map_err(|e| CliError::Config(format!("field `newton`: {e}")))?;
        Ok(())
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    /// The mesh, built or loaded and checked for admissibility.
    pub fn build_mesh(&self) -> Result<Mesh, CliError> {
        self.mesh.build()
    }

    pub fn time_options(&self) -> TimeLoopOptions {
        TimeLoopOptions { dt: self.time.dt, t_end: self.time.t_end, max_steps: self.time.max_steps, steady_tol: self.time.steady_tol }
    }

    /// Model configuration, Dirichlet data and initial state on `mesh`.
    pub fn instantiate(&self, mesh: &Mesh) -> Result<Problem, CliError> {
        let species = self.species.iter().map(|s| Species::new(s.name.clone(), s.z, s.d)).collect();
        let n = mesh.num_cells();
        let mut config = ModelConfig::new(species, self.beta, self.lambda2, n)
            .with_background(vec![self.background_charge; n])
            .with_drift(self.flags.drift_enabled);
        let (x0, x1) = x_range(mesh);
        let mut bc = BoundaryData::from_fn(mesh, self.num_species(), |p| {
            (self.species.iter().map(|s| s.bc.at(p[0], x0, x1)).collect(), self.potential.bc.at(p[0], x0, x1))
        });
        if let Some(ImmobileSpec::OxygenRamp { u_max }) = self.immobile {
            config = config.with_oxygen(mesh, u_max);
            bc = bc.with_immobile(mesh, |p| oxygen_profile(p, u_max));
        }
        let profiles: Vec<InitialProfile> = self
            .species
            .iter()
            .map(|s| match s.init {
                InitSpec::Keyword(InitKeyword::ConnectBoundary) => {
                    let (left, right) = s.bc.ends();
                    InitialProfile::LinearX { left, right }
                }
                InitSpec::Profile(Profile::Constant(c)) => InitialProfile::Constant(c),
                InitSpec::Profile(Profile::Linear { left, right }) => InitialProfile::LinearX { left, right },
            })
            .collect();
        let initial = initial_state(mesh, &config, &bc, &profiles)?;
        Ok(Problem { config, bc, initial })
    }
}

/// A scenario instantiated on a mesh.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ModelConfig,
    pub bc: BoundaryData,
    pub initial: State,
}

fn x_range(mesh: &Mesh) -> (f64, f64) {
    mesh.vertices().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[0]), b.max(p[0])))
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh, CliError> {
        let mesh = match self {
            MeshSpec::File(p) => load_mesh(p)?,
            MeshSpec::Structured(s) => {
                let [x0, y0, x1, y1] = s.rect;
                build_structured_mesh(s.nx, s.ny, Rect::new(x0, y0, x1, y1), s.markers.sides())?
            }
            MeshSpec::Channel { level } => channel_mesh(*level)?,
        };
        Ok(mesh.validated(crossflux_core::mesh::DEFAULT_ORTHOGONALITY_TOL)?)
    }

    /// The same family at `level` levels of refinement: channel levels
    /// directly, structured grids with `2^level` times the cells per side.
    pub fn at_level(&self, level: u32) -> Result<MeshSpec, CliError> {
        match self {
            MeshSpec::Channel { .. } => Ok(MeshSpec::Channel { level }),
            MeshSpec::Structured(s) => Ok(MeshSpec::Structured(StructuredSpec { nx: s.nx << level, ny: s.ny << level, ..*s })),
            MeshSpec::File(_) => Err(CliError::Study("mesh files carry no refinement hierarchy".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "species": [{ "name": "a", "z": 1, "D": 1.0, "init": 0.1, "bc": 0.1 }],
        "beta": 1.0, "lambda2": 1.0,
        "mesh": { "structured": { "nx": 4, "ny": 2 } }
    }"#;

    #[test]
    fn defaults_fill_in() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.time.dt, 1e-3);
        assert_eq!(s.time.steady_tol, 1e-12);
        assert_eq!(s.output.snapshot_steps, vec![50, 1400]);
        assert!(s.flags.drift_enabled);
        assert_eq!(s.newton.options(), NewtonOptions::default());
        assert_eq!(s.potential.bc, Profile::Constant(0.0));
    }

    #[test]
    fn charge_of_wrong_type_names_field_and_line() {
        let text = MINIMAL.replace(r#""z": 1"#, r#""z": "two""#);
        let err = parse_scenario(&text).unwrap_err();
        let msg = err.to_string();
        assert_eq!(err.exit_code(), 2);
        assert!(msg.contains("species[0].z") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_immobile_type_is_rejected() {
        let text = MINIMAL.replace(r#""beta""#, r#""immobile": { "type": "sulfur" }, "beta""#);
        assert_eq!(parse_scenario(&text).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn connect_boundary_joins_the_end_values() {
        let text = MINIMAL
            .replace(r#""init": 0.1, "bc": 0.1"#, r#""init": "connect_boundary", "bc": { "left": 0.1, "right": 0.3 }"#);
        let s = parse_scenario(&text).unwrap();
        let mesh = s.build_mesh().unwrap();
        let p = s.instantiate(&mesh).unwrap();
        let expected = [0.125, 0.175, 0.225, 0.275];
        for (k, c) in mesh.cells().iter().enumerate() {
            let i = (c.center[0] * 4.0) as usize;
            assert!((p.initial.u[0][k] - expected[i]).abs() < 1e-15);
        }
        for (slot, &e) in mesh.dirichlet_edges().iter().enumerate() {
            let x = mesh.edge_midpoint(e)[0];
            assert!((p.bc.u[0][slot] - (0.1 + 0.2 * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn structured_levels_double_the_resolution() {
        let s = parse_scenario(MINIMAL).unwrap();
        let MeshSpec::Structured(f) = s.mesh.at_level(2).unwrap() else { panic!() };
        assert_eq!((f.nx, f.ny), (16, 8));
        assert!(MeshSpec::File("m".into()).at_level(1).is_err());
    }
}
