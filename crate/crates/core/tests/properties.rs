use crossflux_core::mesh::{build_structured_mesh, discrete_h1_norm, discrete_hminus1_norm, Rect, SideMarkers};
use crossflux_core::model::{entropy_variables, invert_entropy_variables};
use crossflux_core::scheme::{coupled_residual, edge_flux, simplified_flux, sqrt_form_flux, EdgeSides};
use crossflux_core::{BoundaryData, BoundaryKind, CellField, EdgeKind, Mesh, ModelConfig, Species, State};
use proptest::prelude::*;

fn neumann_mesh(nx: usize, ny: usize, w: f64, h: f64) -> Mesh {
    build_structured_mesh(nx, ny, Rect::new(0.0, 0.0, w, h), SideMarkers::all(BoundaryKind::Neumann)).unwrap()
}

/// Point strictly inside the simplex `{u_i > 0, Σ u_i < 1}`.
fn simplex_point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n + 1).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w[..w.len() - 1].iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_variables_invert(u in simplex_point(3), phi in -3.0f64..3.0, z in prop::collection::vec(-2.0f64..2.0, 3), beta in 0.1f64..3.0) {
        let species = z.iter().enumerate().map(|(i, &z)| Species::new(format!("s{i}"), z, 1.0)).collect();
        let cfg = ModelConfig::new(species, beta, 1.0, 1);
        let w = entropy_variables(&u, phi, &cfg).unwrap();
        let back = invert_entropy_variables(&w, phi, &cfg);
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dual_norm_bounds_pairing(
        nx in 1usize..6, ny in 1usize..6,
        v in prop::collection::vec(-1.0f64..1.0, 36),
        w in prop::collection::vec(-1.0f64..1.0, 36),
    ) {
        let mesh = neumann_mesh(nx, ny, 1.3, 0.7);
        let n = mesh.num_cells();
        let (v, w) = (CellField::new(v[..n].to_vec()), CellField::new(w[..n].to_vec()));
        let pairing: f64 = mesh.cells().iter().enumerate().map(|(k, c)| c.measure * v.values[k] * w.values[k]).sum();
        let bound = discrete_hminus1_norm(&v, &mesh).unwrap() * discrete_h1_norm(&w, &mesh);
        prop_assert!(pairing.abs() <= bound * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn summation_by_parts(nx in 1usize..7, ny in 1usize..7, seed in prop::collection::vec(-1.0f64..1.0, 98)) {
        let mesh = neumann_mesh(nx, ny, 1.0, 2.0);
        let n = mesh.num_cells();
        let (u, v) = (&seed[..n], &seed[49..49 + n]);
        // Σ_K v_K Σ_σ τ D_{K,σ} u  =  −Σ_σ τ D_σ u D_σ v
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for e in mesh.edges() {
            if let EdgeKind::Interior { k, l } = e.kind {
                let du = u[l] - u[k];
                lhs += e.transmissibility * (v[k] * du - v[l] * du);
                rhs -= e.transmissibility * du * (v[l] - v[k]);
            }
        }
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn dual_cells_tile_the_domain(nx in 1usize..9, ny in 1usize..9, w in 0.1f64..3.0, h in 0.1f64..3.0) {
        let mesh = neumann_mesh(nx, ny, w, h);
        let dual: f64 = mesh.edges().iter().map(|e| e.dual_measure).sum();
        prop_assert!((dual - w * h).abs() <= 1e-12 * w * h);
    }

    #[test]
    fn flux_forms_agree(
        tau in 0.1f64..10.0, d in 0.1f64..3.0,
        u in simplex_point(1), v in simplex_point(1),
    ) {
        let (uk, ul) = (u[0], v[0]);
        let (u0k, u0l) = (1.0 - uk, 1.0 - ul);
        let sides = EdgeSides { tau, u0k, u0l, phik: 0.0, phil: 0.0 };
        let full = edge_flux(&sides, uk, ul, d, 0.0, 1.0, false).flux;
        let simple = simplified_flux(tau, d, u0k, u0l, uk, ul);
        let sqrt = sqrt_form_flux(tau, d, u0k, u0l, uk, ul).unwrap();
        let scale = 1e-12 * (1.0 + full.abs());
        prop_assert!((full - simple).abs() <= scale && (full - sqrt).abs() <= scale);
    }

    #[test]
    fn neumann_residual_telescopes(u in prop::collection::vec(0.05f64..0.4, 12), old in prop::collection::vec(0.05f64..0.4, 12), phi in prop::collection::vec(-1.0f64..1.0, 6)) {
        let mesh = neumann_mesh(3, 2, 1.0, 1.0);
        let species = vec![Species::new("a", 1.0, 1.0), Species::new("b", -1.0, 1.7)];
        let cfg = ModelConfig::new(species, 1.0, 0.5, 6);
        let bc = BoundaryData::uniform(&mesh, &[0.1, 0.1], 0.0);
        let new = State::new(vec![u[..6].to_vec(), u[6..].to_vec()], phi.clone());
        let prev = State::new(vec![old[..6].to_vec(), old[6..].to_vec()], phi);
        let dt = 0.1;
        let r = coupled_residual(&new, &prev, dt, &mesh, &cfg, &bc);
        for i in 0..2 {
            let total: f64 = (0..6).map(|k| r.species(k, i)).sum();
            let storage: f64 = (0..6).map(|k| mesh.cell(k).measure * (new.u[i][k] - prev.u[i][k]) / dt).sum();
            prop_assert!((total - storage).abs() <= 1e-12);
        }
    }
}
