//! Damped Newton for the implicit Euler system and the time loop.

use log::{debug, trace};
use thiserror::Error;

use crate::linalg::{CsrMatrix, LinearSolveError, LuPattern, SparseLu};
use crate::mesh::Mesh;
use crate::model::{BoundaryData, ModelConfig, ModelError, State};
use crate::scheme::{norm_inf, Assembler};

/// Concentrations more negative than this after a converged step are a
/// defect of the scheme, not roundoff.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    /// Bound on the residual ∞-norm.
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Step reduction factor of the backtracking line search.
    pub backtrack: f64,
    pub min_step: f64,
    /// Clip iterates into the simplex after every update.
    pub projection: bool,
    /// Keep the factorized Jacobian across iterations and time steps while
    /// the residual contracts by at least `reuse_contraction` per update.
    pub jacobian_reuse: bool,
    pub reuse_contraction: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_iter: 50,
            backtrack: 0.5,
            min_step: 2f64.powi(-20),
            projection: false,
            jacobian_reuse: false,
            reuse_contraction: 0.5,
        }
    }
}

impl NewtonOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.abs_tol > 0.0) || self.max_iter == 0 || !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.min_step > 0.0)
        {
            return Err(SolverError::InvalidOptions(format!("{self:?}")));
        }
        if !(self.reuse_contraction > 0.0 && self.reuse_contraction < 1.0) {
            return Err(SolverError::InvalidOptions("reuse_contraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeLoopOptions {
    pub dt: f64,
    pub t_end: Option<f64>,
    pub max_steps: Option<usize>,
    /// Threshold on the discrete L² change between consecutive steps.
    pub steady_tol: f64,
}

impl Default for TimeLoopOptions {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: None, max_steps: None, steady_tol: 1e-12 }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, best: Box<State> },
    #[error("line search failed at iteration {iteration} (residual {residual:e})")]
    LineSearch { iteration: usize, residual: f64, best: Box<State> },
    #[error("bound violated: {quantity} = {value:e} in cell {cell}")]
    StructureViolation { quantity: String, cell: usize, value: f64 },
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error("time step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<SolverError>,
    },
    #[error(transparent)]
    Linear(#[from] LinearSolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SolverError {
    /// The innermost error, skipping step annotations.
    pub fn root(&self) -> &SolverError {
        match self {
            SolverError::AtStep { source, .. } => source.root(),
            e => e,
        }
    }
}

/// What happened during one implicit step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    pub iterations: usize,
    pub factorizations: usize,
    pub residual_norm: f64,
    /// Smallest `u_{i,K}` per species, before clipping.
    pub min_u: Vec<f64>,
    /// Smallest `u_{0,K}` before clipping.
    pub min_u0: f64,
    /// Largest amount removed by clipping.
    pub clip: f64,
}

/// Newton solver bound to one mesh, holding the Jacobian pattern, the
/// symbolic factorization and (with reuse) the last numeric factorization.
pub struct StepSolver<'a> {
    mesh: &'a Mesh,
    config: &'a ModelConfig,
    bc: &'a BoundaryData,
    opts: NewtonOptions,
    asm: Assembler,
    jac: CsrMatrix,
    symbolic: Option<LuPattern>,
    lu: Option<SparseLu>,
}

impl<'a> StepSolver<'a> {
    pub fn new(mesh: &'a Mesh, config: &'a ModelConfig, bc: &'a BoundaryData, opts: NewtonOptions) -> Result<Self, SolverError> {
        opts.validate()?;
        config.validate(mesh)?;
        bc.validate(mesh, config.num_species())?;
        let asm = Assembler::new(mesh, config.num_species());
        let jac = asm.pattern();
        Ok(Self { mesh, config, bc, opts, asm, jac, symbolic: None, lu: None })
    }

    pub fn options(&self) -> &NewtonOptions {
        &self.opts
    }

    pub fn residual(&self, x: &[f64], x_old: &[f64], dt: f64) -> Vec<f64> {
        self.asm.residual(x, x_old, dt, self.mesh, self.config, self.bc)
    }

    fn refactor(&mut self, x: &[f64], x_old: &[f64], dt: f64) -> Result<Vec<f64>, SolverError> {
        let r = self.asm.residual_and_jacobian(x, x_old, dt, self.mesh, self.config, self.bc, &mut self.jac);
        if self.symbolic.is_none() {
            self.symbolic = Some(LuPattern::analyze(&self.jac)?);
        }
        self.lu = Some(SparseLu::factorize_with(&self.jac, self.symbolic.as_ref().unwrap())?);
        Ok(r)
    }

    fn project(&self, x: &mut [f64]) {
        let n = self.config.num_species();
        let b = n + 1;
        for (k, block) in x.chunks_mut(b).enumerate() {
            let room = 1.0 - self.config.immobile[k];
            for v in &mut block[..n] {
                *v = v.clamp(0.0, 1.0);
            }
            let s: f64 = block[..n].iter().sum();
            if s > room {
                for v in &mut block[..n] {
                    *v *= room / s;
                }
            }
        }
    }

    /// One damped Newton update from `x`. Returns the new iterate and its
    /// residual ∞-norm.
    pub fn newton_step(&mut self, x: &[f64], x_old: &[f64], dt: f64) -> Result<(Vec<f64>, f64), SolverError> {
        let r = self.refactor(x, x_old, dt)?;
        let (x_new, r_new, _) = self.line_search(x, &r, x_old, dt, 0)?;
        Ok((x_new, norm_inf(&r_new)))
    }

    fn direction(&self, r: &[f64]) -> Result<Vec<f64>, SolverError> {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        Ok(self.lu.as_ref().expect("factorization present").solve(&neg)?)
    }

    fn trial(&self, x: &[f64], delta: &[f64], lambda: f64) -> Vec<f64> {
        let mut xt: Vec<f64> = x.iter().zip(delta).map(|(a, d)| a + lambda * d).collect();
        if self.opts.projection {
            self.project(&mut xt);
        }
        xt
    }

    fn line_search(
        &self,
        x: &[f64],
        r: &[f64],
        x_old: &[f64],
        dt: f64,
        iteration: usize,
    ) -> Result<(Vec<f64>, Vec<f64>, f64), SolverError> {
        let delta = self.direction(r)?;
        let r0 = norm_inf(r);
        let mut lambda = 1.0;
        loop {
            let xt = self.trial(x, &delta, lambda);
            let rt = self.residual(&xt, x_old, dt);
            let nt = norm_inf(&rt);
            if nt.is_finite() && (nt <= (1.0 - 1e-4 * lambda) * r0 || nt <= self.opts.abs_tol) {
                return Ok((xt, rt, lambda));
            }
            lambda *= self.opts.backtrack;
            if lambda < self.opts.min_step {
                return Err(SolverError::LineSearch {
                    iteration,
                    residual: r0,
                    best: Box::new(State::from_unknowns(x, self.config.num_species())),
                });
            }
        }
    }

    /// Solves one implicit Euler step starting from the old level.
    pub fn solve(&mut self, old: &State, dt: f64) -> Result<(State, StepReport), SolverError> {
        let x_old = old.to_unknowns();
        let mut x = x_old.clone();
        let mut report = StepReport::default();
        let mut r = self.residual(&x, &x_old, dt);
        let mut fresh = false;
        let mut iterations = 0;
        loop {
            let rn = norm_inf(&r);
            trace!("newton iteration {iterations}: residual {rn:e}");
            if iterations > 0 && rn <= self.opts.abs_tol {
                break;
            }
            if iterations >= self.opts.max_iter {
                return Err(SolverError::NonConvergence {
                    iterations,
                    residual: rn,
                    best: Box::new(State::from_unknowns(&x, self.config.num_species())),
                });
            }
            iterations += 1;
            let reuse = self.opts.jacobian_reuse && self.lu.is_some() && !fresh;
            if reuse {
                let delta = self.direction(&r)?;
                let xt = self.trial(&x, &delta, 1.0);
                let rt = self.residual(&xt, &x_old, dt);
                let nt = norm_inf(&rt);
                if nt.is_finite() && (nt <= self.opts.reuse_contraction * rn || nt <= self.opts.abs_tol) {
                    x = xt;
                    r = rt;
                    continue;
                }
                // stale Jacobian: rebuild and redo this iteration
            }
            r = self.refactor(&x, &x_old, dt)?;
            report.factorizations += 1;
            let (xn, rnew, lambda) = self.line_search(&x, &r, &x_old, dt, iterations)?;
            fresh = lambda < 1.0 || norm_inf(&rnew) > self.opts.reuse_contraction * norm_inf(&r);
            x = xn;
            r = rnew;
        }
        if !self.opts.jacobian_reuse {
            self.lu = None;
        }
        report.iterations = iterations;
        report.residual_norm = norm_inf(&r);
        let mut state = State::from_unknowns(&x, self.config.num_species());
        state.step = old.step + 1;
        state.time = old.time + dt;
        self.enforce_bounds(&mut state, &mut report)?;
        Ok((state, report))
    }

    fn enforce_bounds(&self, state: &mut State, report: &mut StepReport) -> Result<(), SolverError> {
        let n = state.num_species();
        report.min_u = state.u.iter().map(|ui| ui.iter().copied().fold(f64::INFINITY, f64::min)).collect();
        let u0 = state.solvent(self.config);
        report.min_u0 = u0.iter().copied().fold(f64::INFINITY, f64::min);
        for (i, ui) in state.u.iter().enumerate() {
            if let Some(k) = ui.iter().position(|v| *v < -BOUND_TOLERANCE) {
                return Err(SolverError::StructureViolation { quantity: format!("u_{}", i + 1), cell: k, value: ui[k] });
            }
        }
        let equal_d = self.config.equal_d();
        if equal_d {
            if let Some(k) = u0.iter().position(|v| *v < -BOUND_TOLERANCE) {
                return Err(SolverError::StructureViolation { quantity: "u_0".into(), cell: k, value: u0[k] });
            }
        }
        let mut clip = 0.0f64;
        for k in 0..state.num_cells() {
            for i in 0..n {
                if state.u[i][k] < 0.0 {
                    clip = clip.max(-state.u[i][k]);
                    state.u[i][k] = 0.0;
                }
            }
            if equal_d {
                let room = 1.0 - self.config.immobile[k];
                let s: f64 = (0..n).map(|i| state.u[i][k]).sum();
                if s > room {
                    clip = clip.max(s - room);
                    for i in 0..n {
                        state.u[i][k] *= room / s;
                    }
                }
            }
        }
        if clip > 0.0 {
            debug!("step {}: clipped {clip:e}", state.step);
        }
        report.clip = clip;
        Ok(())
    }
}

/// One damped Newton update: solves `J δ = −R` at `guess` and backtracks on
/// the residual ∞-norm.
#[allow(clippy::too_many_arguments)]
pub fn newton_step(
    guess: &State,
    old: &State,
    dt: f64,
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
    opts: &NewtonOptions,
) -> Result<(State, f64), SolverError> {
    let mut solver = StepSolver::new(mesh, config, bc, opts.clone())?;
    let (x, rn) = solver.newton_step(&guess.to_unknowns(), &old.to_unknowns(), dt)?;
    let mut s = State::from_unknowns(&x, config.num_species());
    s.step = guess.step;
    s.time = guess.time;
    Ok((s, rn))
}

pub fn advance_time_step(
    old: &State,
    dt: f64,
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
    opts: &NewtonOptions,
) -> Result<(State, StepReport), SolverError> {
    StepSolver::new(mesh, config, bc, opts.clone())?.solve(old, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Steady,
    EndTime,
    MaxSteps,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Steady => "steady",
            StopReason::EndTime => "end_time",
            StopReason::MaxSteps => "max_steps",
        }
    }
}

/// Data handed to the per-step callback.
pub struct StepRecord<'s> {
    pub state: &'s State,
    pub previous: &'s State,
    pub report: &'s StepReport,
    /// Discrete L² change of the concentrations.
    pub change: f64,
    pub dt: f64,
}

pub enum StepControl {
    Continue,
    Abort(String),
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: State,
    pub steps: usize,
    pub stop_reason: StopReason,
    pub last_change: f64,
}

/// Advances until the steady-state criterion, `t_end` or `max_steps`.
#[allow(clippy::too_many_arguments)]
pub fn run(
    initial: &State,
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
    time: &TimeLoopOptions,
    newton: &NewtonOptions,
    mut on_step: impl FnMut(&StepRecord) -> StepControl,
) -> Result<RunSummary, SolverError> {
    if !(time.dt > 0.0) || !time.dt.is_finite() {
        return Err(SolverError::InvalidOptions(format!("time step must be positive, got {}", time.dt)));
    }
    let mut solver = StepSolver::new(mesh, config, bc, newton.clone())?;
    let mut current = initial.clone();
    let mut steps = 0;
    loop {
        let (next, report) = solver
            .solve(&current, time.dt)
            .map_err(|e| SolverError::AtStep { step: current.step + 1, source: Box::new(e) })?;
        steps += 1;
        let change = next.l2_distance(&current, mesh);
        debug!(
            "step {}: change {change:e}, {} iterations, {} factorizations",
            next.step, report.iterations, report.factorizations
        );
        let control = on_step(&StepRecord { state: &next, previous: &current, report: &report, change, dt: time.dt });
        if let StepControl::Abort(msg) = control {
            return Err(SolverError::AtStep { step: next.step, source: Box::new(SolverError::Aborted(msg)) });
        }
        current = next;
        let reason = if change < time.steady_tol {
            Some(StopReason::Steady)
        } else if time.t_end.is_some_and(|t| current.time >= t - 1e-9 * time.dt) {
            Some(StopReason::EndTime)
        } else if time.max_steps.is_some_and(|m| steps >= m) {
            Some(StopReason::MaxSteps)
        } else {
            None
        };
        if let Some(stop_reason) = reason {
            return Ok(RunSummary { final_state: current, steps, stop_reason, last_change: change });
        }
    }
}

#[cfg(test)]
mod tests;
