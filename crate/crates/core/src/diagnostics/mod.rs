//! Entropy, entropy production, relative entropy, the Gajewski semimetric,
//! a priori norms and per-step reports.

mod report;

use thiserror::Error;

use crate::mesh::{discrete_h1_norm, CellField, EdgeKind, HMinusOneNorm, Mesh, MeshError};
use crate::model::{ModelConfig, State};

pub use report::{DiagnosticsReport, DiagnosticsRow, RowBuilder};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// `z(log z − 1) + 1`, continuously extended by `h(0) = 1`.
pub fn h(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z * (z.ln() - 1.0) + 1.0
    }
}

fn check_nonnegative(state: &State, u0: &[f64]) -> Result<(), DiagnosticsError> {
    for (i, ui) in std::iter::once(u0).chain(state.u.iter().map(|v| v.as_slice())).enumerate() {
        if let Some(k) = ui.iter().position(|v| !(*v >= 0.0)) {
            return Err(DiagnosticsError::Domain(format!("u_{i} = {} < 0 in cell {k}", ui[k])));
        }
    }
    Ok(())
}

/// `H = Σ_K m(K) Σ_{i=0}^n h(u_{i,K})`.
pub fn entropy(state: &State, mesh: &Mesh, config: &ModelConfig) -> Result<f64, DiagnosticsError> {
    let u0 = state.solvent(config);
    check_nonnegative(state, &u0)?;
    Ok(mesh
        .cells()
        .iter()
        .enumerate()
        .map(|(k, c)| c.measure * (h(u0[k]) + state.u.iter().map(|ui| h(ui[k])).sum::<f64>()))
        .sum())
}

/// Entropy production of the drift-free scheme with equal diffusion
/// coefficients:
/// `D Σ_{K|L} τ [4 Σ_i u_{0,σ}(√u_{i,K} − √u_{i,L})² + 4(√u_{0,K} − √u_{0,L})² + (u_{0,K} − u_{0,L})²]`.
pub fn entropy_production(state: &State, mesh: &Mesh, config: &ModelConfig) -> Result<f64, DiagnosticsError> {
    if !config.equal_d() {
        return Err(DiagnosticsError::Domain("entropy production needs equal diffusion coefficients".into()));
    }
    let u0 = state.solvent(config);
    check_nonnegative(state, &u0)?;
    let d = config.species[0].d;
    let mut total = 0.0;
    for (_, e) in mesh.interior_edges() {
        let EdgeKind::Interior { k, l } = e.kind else { unreachable!() };
        let u0s = u0[k].max(u0[l]);
        let mut s: f64 = state.u.iter().map(|ui| u0s * (ui[k].sqrt() - ui[l].sqrt()).powi(2)).sum::<f64>() * 4.0;
        s += 4.0 * (u0[k].sqrt() - u0[l].sqrt()).powi(2);
        s += (u0[k] - u0[l]).powi(2);
        total += e.transmissibility * s;
    }
    Ok(d * total)
}

/// `(H^k − H^{k−1})/Δt + I^k`; nonpositive along solutions of the
/// drift-free equal-diffusion scheme.
pub fn check_entropy_inequality(
    state_new: &State,
    state_old: &State,
    dt: f64,
    mesh: &Mesh,
    config: &ModelConfig,
) -> Result<f64, DiagnosticsError> {
    let hn = entropy(state_new, mesh, config)?;
    let ho = entropy(state_old, mesh, config)?;
    Ok((hn - ho) / dt + entropy_production(state_new, mesh, config)?)
}

/// `E = Σ_K m(K) Σ_{i=0}^n u_i log(u_i/u_i^∞) + λ²/2 Σ_σ τ_σ D_{K,σ}(Φ − Φ^∞)²`.
pub fn relative_entropy(
    state: &State,
    steady: &State,
    mesh: &Mesh,
    config: &ModelConfig,
) -> Result<f64, DiagnosticsError> {
    let (u0, v0) = (state.solvent(config), steady.solvent(config));
    check_nonnegative(state, &u0)?;
    let term = |a: f64, b: f64, k: usize| -> Result<f64, DiagnosticsError> {
        if a == 0.0 {
            Ok(0.0)
        } else if !(b > 0.0) {
            Err(DiagnosticsError::Domain(format!("steady state vanishes in cell {k} where the state is positive")))
        } else {
            Ok(a * (a / b).ln())
        }
    };
    let mut e = 0.0;
    for (k, c) in mesh.cells().iter().enumerate() {
        let mut s = term(u0[k], v0[k], k)?;
        for (ui, vi) in state.u.iter().zip(&steady.u) {
            s += term(ui[k], vi[k], k)?;
        }
        e += c.measure * s;
    }
    let dphi = |k: usize| state.phi[k] - steady.phi[k];
    let mut energy = 0.0;
    for edge in mesh.edges() {
        let d = match edge.kind {
            EdgeKind::Interior { k, l } => dphi(l) - dphi(k),
            // both states share the boundary data, so the trace difference is 0
            EdgeKind::Dirichlet { cell, .. } => -dphi(cell),
            EdgeKind::Neumann { .. } => 0.0,
        };
        energy += edge.transmissibility * d * d;
    }
    Ok(e + 0.5 * config.lambda2 * energy)
}

fn h_eps(z: f64, eps: f64) -> f64 {
    (z + eps) * ((z + eps).ln() - 1.0) + 1.0
}

/// `d_ε(u, v) = Σ_K m(K) Σ_{i≥1} [h_ε(u_i) + h_ε(v_i) − 2 h_ε((u_i + v_i)/2)]`.
pub fn gajewski_semimetric(u: &State, v: &State, eps: f64, mesh: &Mesh) -> f64 {
    let mut d = 0.0;
    for (ui, vi) in u.u.iter().zip(&v.u) {
        for (k, c) in mesh.cells().iter().enumerate() {
            let (a, b) = (ui[k], vi[k]);
            d += c.measure * (h_eps(a, eps) + h_eps(b, eps) - 2.0 * h_eps(0.5 * (a + b), eps));
        }
    }
    d
}

/// Space-time norms of the a priori estimates over a window of states.
#[derive(Debug, Clone, PartialEq)]
pub struct AprioriNorms {
    /// `‖u_0^{1/2}‖_{1,T,Δt}`.
    pub sqrt_u0: f64,
    /// `‖u_0^{1/2} u_i‖_{1,T,Δt}` per species.
    pub sqrt_u0_ui: Vec<f64>,
    /// `Σ_k Δt ‖(u_i^k − u_i^{k−1})/Δt‖²_{−1,T}` per species.
    pub time_derivative: Vec<f64>,
}

/// Running sums for [`AprioriNorms`], fed one step at a time.
pub struct AprioriAccumulator {
    hm1: HMinusOneNorm,
    sq_u0: f64,
    sq_ui: Vec<f64>,
    dtime: Vec<f64>,
}

impl AprioriAccumulator {
    pub fn new(mesh: &Mesh, n: usize) -> Result<Self, DiagnosticsError> {
        Ok(Self { hm1: HMinusOneNorm::new(mesh)?, sq_u0: 0.0, sq_ui: vec![0.0; n], dtime: vec![0.0; n] })
    }

    pub fn push(
        &mut self,
        previous: &State,
        state: &State,
        dt: f64,
        mesh: &Mesh,
        config: &ModelConfig,
    ) -> Result<(), DiagnosticsError> {
        let r0: Vec<f64> = state.solvent(config).iter().map(|v| v.max(0.0).sqrt()).collect();
        self.sq_u0 += dt * discrete_h1_norm(&CellField::new(r0.clone()), mesh).powi(2);
        for (i, ui) in state.u.iter().enumerate() {
            let w: Vec<f64> = r0.iter().zip(ui).map(|(a, b)| a * b).collect();
            self.sq_ui[i] += dt * discrete_h1_norm(&CellField::new(w), mesh).powi(2);
            let dv: Vec<f64> = ui.iter().zip(&previous.u[i]).map(|(a, b)| (a - b) / dt).collect();
            self.dtime[i] += dt * self.hm1.norm(&dv)?.powi(2);
        }
        Ok(())
    }

    pub fn norms(&self) -> AprioriNorms {
        AprioriNorms {
            sqrt_u0: self.sq_u0.sqrt(),
            sqrt_u0_ui: self.sq_ui.iter().map(|v| v.sqrt()).collect(),
            time_derivative: self.dtime.clone(),
        }
    }
}

/// A priori norms over consecutive states `window[0..]` with step `dt`.
pub fn apriori_norms(window: &[State], dt: f64, mesh: &Mesh, config: &ModelConfig) -> Result<AprioriNorms, DiagnosticsError> {
    if window.len() < 2 {
        return Err(DiagnosticsError::Domain("a priori norms need at least two states".into()));
    }
    let mut acc = AprioriAccumulator::new(mesh, config.num_species())?;
    for w in window.windows(2) {
        acc.push(&w[0], &w[1], dt, mesh, config)?;
    }
    Ok(acc.norms())
}

/// Per-species min and max, with the solvent first.
pub fn extrema(state: &State, config: &ModelConfig) -> Vec<(f64, f64)> {
    let u0 = state.solvent(config);
    std::iter::once(&u0)
        .chain(state.u.iter())
        .map(|v| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x))))
        .collect()
}
