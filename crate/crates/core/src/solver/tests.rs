use super::*;
use crate::mesh::{build_structured_mesh, BoundaryKind, Rect, SideMarkers};
use crate::model::Species;
use crate::scheme::coupled_residual;

fn two_cells() -> Mesh {
    build_structured_mesh(2, 1, Rect::new(0.0, 0.0, 2.0, 1.0), SideMarkers::all(BoundaryKind::Neumann)).unwrap()
}

fn one_species(nc: usize) -> ModelConfig {
    ModelConfig::new(vec![Species::new("a", 0.0, 1.0)], 1.0, 1.0, nc).with_drift(false)
}

#[test]
fn uniform_equilibrium_is_a_fixed_point() {
    let mesh = build_structured_mesh(3, 3, Rect::unit(), SideMarkers::left_right_dirichlet()).unwrap();
    let cfg = ModelConfig::new(vec![Species::new("a", 1.0, 1.0), Species::new("b", -1.0, 1.0)], 1.0, 1.0, 9);
    let bc = BoundaryData::uniform(&mesh, &[0.2, 0.2], 0.3);
    let s = State::new(vec![vec![0.2; 9], vec![0.2; 9]], vec![0.3; 9]);
    let (next, report) = advance_time_step(&s, 1e-3, &mesh, &cfg, &bc, &NewtonOptions::default()).unwrap();
    assert!(report.residual_norm <= 1e-10);
    assert!(next.l2_distance(&s, &mesh) < 1e-12);
    let (again, rn) = newton_step(&s, &s, 1e-3, &mesh, &cfg, &bc, &NewtonOptions::default()).unwrap();
    assert!(rn <= 1e-10);
    assert_eq!(again.u, s.u);
}

#[test]
fn potential_only_problem_converges_in_one_step() {
    let mesh = build_structured_mesh(4, 3, Rect::unit(), SideMarkers::left_right_dirichlet()).unwrap();
    let nc = mesh.num_cells();
    let cfg = ModelConfig::new(vec![Species::new("a", 2.0, 1.0)], 1.0, 0.3, nc).with_drift(false);
    let bc = BoundaryData::from_fn(&mesh, 1, |p| (vec![0.25], 3.0 * p[0]));
    let s = State::new(vec![vec![0.25; nc]], vec![0.0; nc]);
    let (_, rn) = newton_step(&s, &s, 1e-2, &mesh, &cfg, &bc, &NewtonOptions::default()).unwrap();
    assert!(rn < 1e-12, "{rn}");
}

#[test]
fn newton_contracts_quadratically_on_two_cells() {
    let mesh = two_cells();
    let cfg = one_species(2);
    let bc = BoundaryData::uniform(&mesh, &[0.0], 0.0);
    let old = State::new(vec![vec![0.8, 0.2]], vec![0.0, 0.0]);
    let dt = 0.5;
    let opts = NewtonOptions::default();
    let mut guess = old.clone();
    let mut norms = vec![coupled_residual(&guess, &old, dt, &mesh, &cfg, &bc).norm_inf()];
    for _ in 0..5 {
        let (next, rn) = newton_step(&guess, &old, dt, &mesh, &cfg, &bc, &opts).unwrap();
        guess = next;
        norms.push(rn);
    }
    for w in norms[..4].windows(2) {
        if w[1] > 1e-14 {
            assert!(w[1] / (w[0] * w[0]) < 10.0, "{norms:?}");
        }
    }
    assert!(norms[5] < 1e-14, "{norms:?}");
}

#[test]
fn no_flux_steps_conserve_mass() {
    let mesh = build_structured_mesh(6, 4, Rect::unit(), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
    let nc = mesh.num_cells();
    let cfg = ModelConfig::new(vec![Species::new("a", 1.0, 1.0), Species::new("b", -1.0, 1.0)], 1.0, 0.5, nc);
    let bc = BoundaryData::uniform(&mesh, &[0.1, 0.1], 0.0);
    let u1 = mesh.cells().iter().map(|c| 0.1 + 0.3 * c.center[0]).collect();
    let u2 = mesh.cells().iter().map(|c| 0.4 - 0.2 * c.center[1]).collect();
    let mut s = State::new(vec![u1, u2], vec![0.0; nc]);
    let m0 = s.masses(&mesh);
    let mut solver = StepSolver::new(&mesh, &cfg, &bc, NewtonOptions::default()).unwrap();
    for _ in 0..20 {
        s = solver.solve(&s, 1e-2).unwrap().0;
    }
    for (a, b) in s.masses(&mesh).iter().zip(&m0) {
        assert!((a - b).abs() <= 1e-10 * b);
    }
}

#[test]
fn two_cell_diffusion_approaches_the_mean() {
    let mesh = two_cells();
    let cfg = one_species(2);
    let bc = BoundaryData::uniform(&mesh, &[0.0], 0.0);
    let mut s = State::new(vec![vec![0.8, 0.2]], vec![0.0, 0.0]);
    let mut gap = 0.6;
    for _ in 0..10 {
        s = advance_time_step(&s, 0.1, &mesh, &cfg, &bc, &NewtonOptions::default()).unwrap().0;
        let g = s.u[0][0] - s.u[0][1];
        assert!(g > 0.0 && g < gap);
        gap = g;
        assert!((s.u[0][0] + s.u[0][1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn steady_start_stops_after_one_step() {
    let mesh = two_cells();
    let cfg = one_species(2);
    let bc = BoundaryData::uniform(&mesh, &[0.0], 0.0);
    let s = State::new(vec![vec![0.4, 0.4]], vec![0.0, 0.0]);
    let time = TimeLoopOptions { max_steps: Some(100), ..Default::default() };
    let summary = run(&s, &mesh, &cfg, &bc, &time, &NewtonOptions::default(), |_| StepControl::Continue).unwrap();
    assert_eq!(summary.steps, 1);
    assert_eq!(summary.stop_reason, StopReason::Steady);
}

#[test]
fn stop_reasons_and_abort() {
    let mesh = two_cells();
    let cfg = one_species(2);
    let bc = BoundaryData::uniform(&mesh, &[0.0], 0.0);
    let s = State::new(vec![vec![0.8, 0.2]], vec![0.0, 0.0]);
    let opts = NewtonOptions::default();
    let t = TimeLoopOptions { dt: 0.01, max_steps: Some(3), ..Default::default() };
    assert_eq!(run(&s, &mesh, &cfg, &bc, &t, &opts, |_| StepControl::Continue).unwrap().stop_reason, StopReason::MaxSteps);
    let t = TimeLoopOptions { dt: 0.01, t_end: Some(0.05), ..Default::default() };
    let r = run(&s, &mesh, &cfg, &bc, &t, &opts, |_| StepControl::Continue).unwrap();
    assert_eq!((r.stop_reason, r.steps), (StopReason::EndTime, 5));
    let err = run(&s, &mesh, &cfg, &bc, &t, &opts, |_| StepControl::Abort("stop".into())).unwrap_err();
    assert!(matches!(err.root(), SolverError::Aborted(_)));
}

#[test]
fn jacobian_reuse_reaches_the_same_step() {
    let mesh = build_structured_mesh(8, 5, Rect::unit(), SideMarkers::left_right_dirichlet()).unwrap();
    let nc = mesh.num_cells();
    let cfg = ModelConfig::new(
        vec![Species::new("a", 2.0, 1.0), Species::new("b", 1.0, 0.8), Species::new("c", -1.0, 1.2)],
        1.0,
        0.5,
        nc,
    );
    let bc = BoundaryData::from_fn(&mesh, 3, |p| (vec![0.1 + 0.1 * p[0], 0.2 - 0.1 * p[0], 0.3], 1.0 - p[0]));
    let s = State::new(vec![vec![0.15; nc], vec![0.15; nc], vec![0.3; nc]], vec![0.5; nc]);
    let plain = NewtonOptions::default();
    let reuse = NewtonOptions { jacobian_reuse: true, ..Default::default() };
    let mut a = s.clone();
    let mut b = s.clone();
    let mut sa = StepSolver::new(&mesh, &cfg, &bc, plain).unwrap();
    let mut sb = StepSolver::new(&mesh, &cfg, &bc, reuse).unwrap();
    let mut fact = (0, 0);
    for _ in 0..10 {
        let (na, ra) = sa.solve(&a, 1e-2).unwrap();
        let (nb, rb) = sb.solve(&b, 1e-2).unwrap();
        fact.0 += ra.factorizations;
        fact.1 += rb.factorizations;
        a = na;
        b = nb;
    }
    assert!(a.l2_distance(&b, &mesh) < 1e-9);
    assert!(fact.1 < fact.0, "{fact:?}");
}

#[test]
fn invalid_options_are_rejected() {
    let mesh = two_cells();
    let cfg = one_species(2);
    let bc = BoundaryData::uniform(&mesh, &[0.0], 0.0);
    let bad = NewtonOptions { max_iter: 0, ..Default::default() };
    assert!(StepSolver::new(&mesh, &cfg, &bc, bad).is_err());
    let s = State::new(vec![vec![0.4, 0.4]], vec![0.0, 0.0]);
    let t = TimeLoopOptions { dt: 0.0, ..Default::default() };
    assert!(run(&s, &mesh, &cfg, &bc, &t, &NewtonOptions::default(), |_| StepControl::Continue).is_err());
}
