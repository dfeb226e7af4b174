//! Discrete fluxes, the Poisson discretization and the coupled implicit
//! Euler residual with its Jacobian.

mod assembly;
pub mod kernel;

use crate::linalg::{solve_linear, CsrMatrix, LinearSolveError};
use crate::mesh::{EdgeKind, Mesh};
use crate::model::{BoundaryData, ModelConfig, State};

pub use assembly::{Assembler, MAX_BLOCK};
pub use kernel::{drift_part as local_drift_part, edge_flux, simplified_flux, sqrt_form_flux, EdgeFlux, EdgeSides};

/// Per-edge, per-species upwind data, stored once per edge and oriented
/// from the owning cell. Neumann edges hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    n: usize,
    data: Vec<EdgeFlux>,
}

impl FluxField {
    pub fn get(&self, edge: usize, species: usize) -> &EdgeFlux {
        &self.data[edge * self.n + species]
    }

    pub fn flux(&self, edge: usize, species: usize) -> f64 {
        self.get(edge, species).flux
    }

    pub fn num_species(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.data.len() / self.n
    }
}

/// Residual of the coupled system, cell-major like the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub n: usize,
    pub values: Vec<f64>,
}

impl Residual {
    pub fn species(&self, cell: usize, i: usize) -> f64 {
        self.values[cell * (self.n + 1) + i]
    }

    pub fn poisson(&self, cell: usize) -> f64 {
        self.values[cell * (self.n + 1) + self.n]
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.values)
    }
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Side values of `edge` for the state, or `None` on a Neumann edge.
/// Returns the sides and the species values `(u_{·,K}, u_{·,K,σ})`.
pub fn edge_sides(
    state: &State,
    edge: usize,
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
) -> Option<(EdgeSides, Vec<f64>, Vec<f64>)> {
    let e = mesh.edge(edge);
    let solvent = |k: usize| 1.0 - state.u.iter().map(|ui| ui[k]).sum::<f64>() - config.immobile[k];
    match e.kind {
        EdgeKind::Neumann { .. } => None,
        EdgeKind::Interior { k, l } => Some((
            EdgeSides {
                tau: e.transmissibility,
                u0k: solvent(k),
                u0l: solvent(l),
                phik: state.phi[k],
                phil: state.phi[l],
            },
            state.u.iter().map(|ui| ui[k]).collect(),
            state.u.iter().map(|ui| ui[l]).collect(),
        )),
        EdgeKind::Dirichlet { cell, slot } => Some((
            EdgeSides {
                tau: e.transmissibility,
                u0k: solvent(cell),
                u0l: bc.solvent(slot),
                phik: state.phi[cell],
                phil: bc.phi[slot],
            },
            state.u.iter().map(|ui| ui[cell]).collect(),
            bc.u.iter().map(|ui| ui[slot]).collect(),
        )),
    }
}

/// `V_{i,K,σ}`; zero on Neumann edges.
pub fn drift_part(state: &State, edge: usize, i: usize, mesh: &Mesh, config: &ModelConfig, bc: &BoundaryData) -> f64 {
    match edge_sides(state, edge, mesh, config, bc) {
        None => 0.0,
        Some((s, _, _)) => kernel::drift_part(&s, config.species[i].z, config.beta, config.drift_enabled).0,
    }
}

/// `F_{i,K,σ}` oriented out of the owning cell; zero on Neumann edges.
pub fn species_flux(state: &State, edge: usize, i: usize, mesh: &Mesh, config: &ModelConfig, bc: &BoundaryData) -> f64 {
    match edge_sides(state, edge, mesh, config, bc) {
        None => 0.0,
        Some((s, uk, ul)) => {
            let sp = &config.species[i];
            edge_flux(&s, uk[i], ul[i], sp.d, sp.z, config.beta, config.drift_enabled).flux
        }
    }
}

/// Square-root form of the drift-free flux; `None` on negative solvent.
pub fn species_flux_sqrt_form(
    state: &State,
    edge: usize,
    i: usize,
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
) -> Option<f64> {
    match edge_sides(state, edge, mesh, config, bc) {
        None => Some(0.0),
        Some((s, uk, ul)) => sqrt_form_flux(s.tau, config.species[i].d, s.u0k, s.u0l, uk[i], ul[i]),
    }
}

pub fn compute_flux_field(state: &State, mesh: &Mesh, config: &ModelConfig, bc: &BoundaryData) -> FluxField {
    let n = config.num_species();
    let mut data = vec![EdgeFlux::default(); mesh.num_edges() * n];
    for e in 0..mesh.num_edges() {
        if let Some((s, uk, ul)) = edge_sides(state, e, mesh, config, bc) {
            for (i, sp) in config.species.iter().enumerate() {
                data[e * n + i] = edge_flux(&s, uk[i], ul[i], sp.d, sp.z, config.beta, config.drift_enabled);
            }
        }
    }
    FluxField { n, data }
}

/// `−λ² Σ_σ τ_σ D_{K,σ}(Φ) − m(K)(Σ_i z_i u_{i,K} + f_K)` per cell.
pub fn poisson_residual(state: &State, mesh: &Mesh, config: &ModelConfig, bc: &BoundaryData) -> Vec<f64> {
    let mut r: Vec<f64> = (0..mesh.num_cells())
        .map(|k| {
            let charge: f64 = config.species.iter().zip(&state.u).map(|(s, ui)| s.z * ui[k]).sum();
            -mesh.cell(k).measure * (charge + config.background[k])
        })
        .collect();
    for e in mesh.edges() {
        let lt = config.lambda2 * e.transmissibility;
        match e.kind {
            EdgeKind::Interior { k, l } => {
                let d = state.phi[l] - state.phi[k];
                r[k] -= lt * d;
                r[l] += lt * d;
            }
            EdgeKind::Dirichlet { cell, slot } => r[cell] -= lt * (bc.phi[slot] - state.phi[cell]),
            EdgeKind::Neumann { .. } => {}
        }
    }
    r
}

/// Solves the Poisson equation for the charge of `u`. Without Dirichlet
/// edges the solution is normalized to zero mean.
pub fn solve_poisson(mesh: &Mesh, config: &ModelConfig, bc: &BoundaryData, u: &[Vec<f64>]) -> Result<Vec<f64>, LinearSolveError> {
    let nc = mesh.num_cells();
    let gauge = !mesh.has_dirichlet();
    let mut rhs: Vec<f64> = (0..nc)
        .map(|k| {
            let charge: f64 = config.species.iter().zip(u).map(|(s, ui)| s.z * ui[k]).sum();
            mesh.cell(k).measure * (charge + config.background[k])
        })
        .collect();
    let mut t = Vec::with_capacity(nc + 4 * mesh.num_edges());
    for e in mesh.edges() {
        let lt = config.lambda2 * e.transmissibility;
        match e.kind {
            EdgeKind::Interior { k, l } => t.extend([(k, k, lt), (l, l, lt), (k, l, -lt), (l, k, -lt)]),
            EdgeKind::Dirichlet { cell, slot } => {
                t.push((cell, cell, lt));
                rhs[cell] += lt * bc.phi[slot];
            }
            EdgeKind::Neumann { .. } => {}
        }
    }
    if gauge {
        t.retain(|&(i, _, _)| i != 0);
        t.extend((0..nc).map(|k| (0, k, mesh.cell(k).measure)));
        rhs[0] = 0.0;
    }
    solve_linear(&CsrMatrix::from_triplets(nc, nc, &t), &rhs)
}

pub fn coupled_residual(
    state_new: &State,
    state_old: &State,
    dt: f64,
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
) -> Residual {
    let asm = Assembler::new(mesh, config.num_species());
    Residual {
        n: config.num_species(),
        values: asm.residual(&state_new.to_unknowns(), &state_old.to_unknowns(), dt, mesh, config, bc),
    }
}

/// Jacobian of [`coupled_residual`] with respect to the new state.
pub fn assemble_jacobian(
    state_new: &State,
    state_old: &State,
    dt: f64,
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
) -> CsrMatrix {
    let asm = Assembler::new(mesh, config.num_species());
    let mut jac = asm.pattern();
    asm.residual_and_jacobian(&state_new.to_unknowns(), &state_old.to_unknowns(), dt, mesh, config, bc, &mut jac);
    jac
}
