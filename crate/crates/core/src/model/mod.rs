//! Physical model: species data, boundary and initial data, the confined
//! oxygen profile and the entropy-variable transformation.

mod entropy_vars;
mod initial;

use thiserror::Error;

use crate::linalg::LinearSolveError;
use crate::mesh::{CellField, Mesh, MeshError, Point};

pub use entropy_vars::{entropy_variables, invert_entropy_variables};
pub use initial::{initial_state, InitialProfile};

/// Avogadro constant in mol⁻¹.
pub const AVOGADRO: f64 = 6.022e23;
/// Typical concentration used for scaling, in L⁻¹.
pub const TYPICAL_CONCENTRATION: f64 = 3.7037e25;
/// Oxygen concentration inside the channel, in mol/L.
pub const OXYGEN_MOLARITY: f64 = 52.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cell {cell}: {message}")]
    InvalidData { cell: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: String,
    /// Charge number `z_i`.
    pub z: f64,
    /// Diffusion coefficient `D_i`.
    pub d: f64,
}

impl Species {
    pub fn new(name: impl Into<String>, z: f64, d: f64) -> Self {
        Self { name: name.into(), z, d }
    }
}

/// Model parameters, with the background charge `f_K` and the immobile
/// concentration `u_imm,K` stored per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub species: Vec<Species>,
    /// `β`, inverse thermal voltage.
    pub beta: f64,
    /// `λ²`, scaled permittivity.
    pub lambda2: f64,
    pub background: Vec<f64>,
    pub immobile: Vec<f64>,
    /// When false, the potential term is dropped from the drift part.
    pub drift_enabled: bool,
}

impl ModelConfig {
    pub fn new(species: Vec<Species>, beta: f64, lambda2: f64, num_cells: usize) -> Self {
        Self {
            species,
            beta,
            lambda2,
            background: vec![0.0; num_cells],
            immobile: vec![0.0; num_cells],
            drift_enabled: true,
        }
    }

    pub fn with_background(mut self, f: Vec<f64>) -> Self {
        self.background = f;
        self
    }

    pub fn with_immobile(mut self, u_imm: Vec<f64>) -> Self {
        self.immobile = u_imm;
        self
    }

    pub fn with_drift(mut self, enabled: bool) -> Self {
        self.drift_enabled = enabled;
        self
    }

    /// Places the confined oxygen ions: `u_imm` is the ramp of
    /// [`oxygen_profile`] at the cell centroids and each carries charge −½,
    /// which is added to the background charge.
    pub fn with_oxygen(mut self, mesh: &Mesh, u_max: f64) -> Self {
        self.immobile = mesh.cells().iter().map(|c| oxygen_profile(c.centroid, u_max)).collect();
        for (f, u) in self.background.iter_mut().zip(&self.immobile) {
            *f -= 0.5 * u;
        }
        self
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    /// True when all diffusion coefficients coincide.
    pub fn equal_d(&self) -> bool {
        self.species.windows(2).all(|w| w[0].d == w[1].d)
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<(), ModelError> {
        if self.species.is_empty() {
            return Err(ModelError::InvalidConfig("at least one species is required".into()));
        }
        for s in &self.species {
            if !(s.d > 0.0) || !s.d.is_finite() {
                return Err(ModelError::InvalidConfig(format!("species {}: D must be positive, got {}", s.name, s.d)));
            }
            if !s.z.is_finite() {
                return Err(ModelError::InvalidConfig(format!("species {}: charge is not finite", s.name)));
            }
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(ModelError::InvalidConfig(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.lambda2 > 0.0) || !self.lambda2.is_finite() {
            return Err(ModelError::InvalidConfig(format!("lambda2 must be positive, got {}", self.lambda2)));
        }
        let n = mesh.num_cells();
        if self.background.len() != n || self.immobile.len() != n {
            return Err(ModelError::InvalidConfig(format!(
                "per-cell data has {} / {} entries, mesh has {n} cells",
                self.background.len(),
                self.immobile.len()
            )));
        }
        if let Some(k) = self.background.iter().position(|f| !f.is_finite()) {
            return Err(ModelError::InvalidData { cell: k, message: "background charge is not finite".into() });
        }
        if let Some(k) = self.immobile.iter().position(|u| !(*u >= 0.0 && *u < 1.0)) {
            return Err(ModelError::InvalidData {
                cell: k,
                message: format!("immobile concentration {} outside [0, 1)", self.immobile[k]),
            });
        }
        Ok(())
    }
}

/// `u_ox,max = (N_A / u_typ) · 52 mol/L`.
pub fn oxygen_max_concentration() -> f64 {
    AVOGADRO / TYPICAL_CONCENTRATION * OXYGEN_MOLARITY
}

/// Piecewise linear oxygen ramp in the scaled channel coordinate `x`.
pub fn oxygen_profile(point: Point, u_max: f64) -> f64 {
    let x = point[0];
    let ramp = if (0.45..=0.55).contains(&x) {
        1.0
    } else if (0.35..0.45).contains(&x) {
        10.0 * (x - 0.35)
    } else if x > 0.55 && x <= 0.65 {
        10.0 * (0.65 - x)
    } else {
        0.0
    };
    u_max * ramp
}

/// Dirichlet data, one entry per Dirichlet trace slot of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    /// `ū_{i,σ}`, indexed `[species][slot]`.
    pub u: Vec<Vec<f64>>,
    /// `Φ̄_σ`.
    pub phi: Vec<f64>,
    /// Immobile concentration on the edge, entering `ū_{0,σ}`.
    pub immobile: Vec<f64>,
}

impl BoundaryData {
    /// Evaluates `g(x) = (ū(x), Φ̄(x))` at every Dirichlet edge midpoint.
    pub fn from_fn(mesh: &Mesh, n: usize, g: impl Fn(Point) -> (Vec<f64>, f64)) -> Self {
        let slots = mesh.num_dirichlet();
        let mut u = vec![Vec::with_capacity(slots); n];
        let mut phi = Vec::with_capacity(slots);
        for &e in mesh.dirichlet_edges() {
            let (ue, pe) = g(mesh.edge_midpoint(e));
            for (i, ui) in u.iter_mut().enumerate() {
                ui.push(ue.get(i).copied().unwrap_or(f64::NAN));
            }
            phi.push(pe);
        }
        Self { u, phi, immobile: vec![0.0; slots] }
    }

    pub fn uniform(mesh: &Mesh, u: &[f64], phi: f64) -> Self {
        Self::from_fn(mesh, u.len(), |_| (u.to_vec(), phi))
    }

    pub fn with_immobile(mut self, mesh: &Mesh, u_imm: impl Fn(Point) -> f64) -> Self {
        self.immobile = mesh.dirichlet_edges().iter().map(|&e| u_imm(mesh.edge_midpoint(e))).collect();
        self
    }

    /// `ū_{0,σ} = 1 − Σ_i ū_{i,σ} − ū_imm,σ`.
    pub fn solvent(&self, slot: usize) -> f64 {
        1.0 - self.u.iter().map(|ui| ui[slot]).sum::<f64>() - self.immobile[slot]
    }

    /// Traces of species `i` attached to its cell values.
    pub fn species_field(&self, i: usize, values: &[f64]) -> CellField {
        CellField::with_traces(values.to_vec(), self.u[i].clone())
    }

    pub fn validate(&self, mesh: &Mesh, n: usize) -> Result<(), ModelError> {
        let slots = mesh.num_dirichlet();
        if self.u.len() != n {
            return Err(ModelError::InvalidConfig(format!("boundary data for {} species, model has {n}", self.u.len())));
        }
        if self.u.iter().any(|ui| ui.len() != slots) || self.phi.len() != slots || self.immobile.len() != slots {
            return Err(ModelError::InvalidConfig(format!("boundary data must have {slots} entries per quantity")));
        }
        for s in 0..slots {
            let edge = mesh.dirichlet_edges()[s];
            if self.u.iter().any(|ui| !(ui[s] >= 0.0)) || !self.phi[s].is_finite() {
                return Err(ModelError::InvalidConfig(format!("Dirichlet edge {edge}: traces must be nonnegative and finite")));
            }
            if !(self.solvent(s) >= 0.0) {
                return Err(ModelError::InvalidConfig(format!(
                    "Dirichlet edge {edge}: boundary concentrations sum to more than 1"
                )));
            }
        }
        Ok(())
    }
}

/// Concentrations and potential at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub step: usize,
    pub time: f64,
    /// `u_{i,K}`, indexed `[species][cell]`.
    pub u: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
}

impl State {
    pub fn new(u: Vec<Vec<f64>>, phi: Vec<f64>) -> Self {
        Self { step: 0, time: 0.0, u, phi }
    }

    pub fn num_species(&self) -> usize {
        self.u.len()
    }

    pub fn num_cells(&self) -> usize {
        self.phi.len()
    }

    /// `u_{0,K} = 1 − Σ_i u_{i,K} − u_imm,K`.
    pub fn solvent(&self, config: &ModelConfig) -> Vec<f64> {
        (0..self.num_cells())
            .map(|k| 1.0 - self.u.iter().map(|ui| ui[k]).sum::<f64>() - config.immobile[k])
            .collect()
    }

    /// `Σ_K m(K) u_{i,K}` for each species.
    pub fn masses(&self, mesh: &Mesh) -> Vec<f64> {
        self.u
            .iter()
            .map(|ui| ui.iter().zip(mesh.cells()).map(|(v, c)| v * c.measure).sum())
            .collect()
    }

    /// Flattens to the cell-major unknown vector `(u_1..u_n, Φ)_K`.
    pub fn to_unknowns(&self) -> Vec<f64> {
        let n = self.num_species();
        let mut x = Vec::with_capacity(self.num_cells() * (n + 1));
        for k in 0..self.num_cells() {
            x.extend(self.u.iter().map(|ui| ui[k]));
            x.push(self.phi[k]);
        }
        x
    }

    pub fn set_unknowns(&mut self, x: &[f64]) {
        let b = self.num_species() + 1;
        for k in 0..self.num_cells() {
            for (i, ui) in self.u.iter_mut().enumerate() {
                ui[k] = x[k * b + i];
            }
            self.phi[k] = x[k * b + b - 1];
        }
    }

    pub fn from_unknowns(x: &[f64], n: usize) -> Self {
        let cells = x.len() / (n + 1);
        let mut s = Self::new(vec![vec![0.0; cells]; n], vec![0.0; cells]);
        s.set_unknowns(x);
        s
    }

    /// Discrete L² distance of the concentrations,
    /// `(Σ_K m(K) Σ_i (u_{i,K} − v_{i,K})²)^{1/2}`.
    pub fn l2_distance(&self, other: &State, mesh: &Mesh) -> f64 {
        let mut s = 0.0;
        for (ui, vi) in self.u.iter().zip(&other.u) {
            for ((a, b), c) in ui.iter().zip(vi).zip(mesh.cells()) {
                s += c.measure * (a - b) * (a - b);
            }
        }
        s.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, BoundaryKind, Rect, SideMarkers};

    #[test]
    fn oxygen_ramp_values() {
        assert_eq!(oxygen_profile([0.5, 0.3], 0.84), 0.84);
        assert_eq!(oxygen_profile([0.2, 0.0], 0.84), 0.0);
        assert!((oxygen_profile([0.40, 1.0], 0.84) - 0.42).abs() < 1e-14);
        assert!((oxygen_profile([0.60, 1.0], 0.84) - 0.42).abs() < 1e-14);
        assert_eq!(oxygen_profile([0.9, 0.0], 0.84), 0.0);
    }

    #[test]
    fn oxygen_ramp_is_continuous_with_exact_plateau() {
        let u_max = 0.7;
        let mut prev = oxygen_profile([0.0, 0.0], u_max);
        let mut top = 0.0f64;
        for j in 1..=100_000 {
            let x = j as f64 / 100_000.0;
            let v = oxygen_profile([x, 0.0], u_max);
            assert!((v - prev).abs() <= 10.0 * u_max * 1e-5 + 1e-15);
            top = top.max(v);
            prev = v;
        }
        assert_eq!(top, u_max);
        assert_eq!(oxygen_profile([0.5, -3.0], u_max), oxygen_profile([0.5, 9.0], u_max));
    }

    #[test]
    fn oxygen_maximum_from_constants() {
        let u = oxygen_max_concentration();
        assert!((u - 0.8455).abs() < 1e-3, "{u}");
        assert!((u - 0.84).abs() < 0.01);
    }

    #[test]
    fn config_validation() {
        let mesh = build_structured_mesh(2, 1, Rect::unit(), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
        let ok = ModelConfig::new(vec![Species::new("a", 1.0, 1.0)], 1.0, 1.0, 2);
        ok.validate(&mesh).unwrap();
        let bad = ModelConfig::new(vec![Species::new("a", 1.0, 0.0)], 1.0, 1.0, 2);
        assert!(bad.validate(&mesh).is_err());
        let bad = ok.clone().with_immobile(vec![0.0, 1.0]);
        assert!(matches!(bad.validate(&mesh), Err(ModelError::InvalidData { cell: 1, .. })));
        let bad = ModelConfig { lambda2: -1.0, ..ok };
        assert!(bad.validate(&mesh).is_err());
    }

    #[test]
    fn oxygen_adds_negative_background() {
        let mesh = build_structured_mesh(10, 1, Rect::unit(), SideMarkers::left_right_dirichlet()).unwrap();
        let cfg = ModelConfig::new(vec![Species::new("a", 1.0, 1.0)], 1.0, 1.0, 10).with_oxygen(&mesh, 0.8);
        assert_eq!(cfg.immobile[4], 0.8);
        assert_eq!(cfg.background[4], -0.4);
        assert_eq!(cfg.immobile[0], 0.0);
    }

    #[test]
    fn unknown_layout_round_trip() {
        let s = State::new(vec![vec![0.1, 0.2], vec![0.3, 0.4]], vec![5.0, 6.0]);
        let x = s.to_unknowns();
        assert_eq!(x, vec![0.1, 0.3, 5.0, 0.2, 0.4, 6.0]);
        assert_eq!(State::from_unknowns(&x, 2), s);
    }

    #[test]
    fn boundary_data_checks_simplex() {
        let mesh = build_structured_mesh(2, 1, Rect::unit(), SideMarkers::left_right_dirichlet()).unwrap();
        let bc = BoundaryData::uniform(&mesh, &[0.3, 0.4], 0.0);
        bc.validate(&mesh, 2).unwrap();
        assert!((bc.solvent(0) - 0.3).abs() < 1e-15);
        let bc = BoundaryData::uniform(&mesh, &[0.7, 0.4], 0.0);
        assert!(bc.validate(&mesh, 2).is_err());
    }
}
