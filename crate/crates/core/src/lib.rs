//! Finite-volume solver for a volume-filling ion transport model: several
//! charged species sharing space with a solvent, coupled to a Poisson
//! equation for the electric potential.
//!
//! The scheme is the implicit Euler, two-point flux discretization with
//! double upwind mobilities. Modules follow the pipeline:
//! [`mesh`] → [`model`] → [`scheme`] → [`solver`], with [`diagnostics`]
//! evaluating entropy-type quantities along trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod scheme;
pub mod solver;

pub use diagnostics::{DiagnosticsError, DiagnosticsReport, DiagnosticsRow};
pub use linalg::{CsrMatrix, LinearSolveError, SparseLu};
pub use mesh::{BoundaryKind, CellField, Edge, EdgeKind, Mesh, MeshError, Point};
pub use model::{BoundaryData, InitialProfile, ModelConfig, ModelError, Species, State};
pub use scheme::{Assembler, FluxField, Residual};
pub use solver::{NewtonOptions, RunSummary, SolverError, StepReport, StepSolver, StopReason, TimeLoopOptions};
