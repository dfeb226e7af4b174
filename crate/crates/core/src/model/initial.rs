use super::{BoundaryData, ModelConfig, ModelError, State};
use crate::mesh::Mesh;
use crate::scheme::solve_poisson;

/// Initial concentration of one species.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialProfile {
    Constant(f64),
    /// Linear in `x`, from `left` at the smallest mesh abscissa to `right`
    /// at the largest.
    LinearX { left: f64, right: f64 },
    /// One value per cell.
    Tabulated(Vec<f64>),
}

impl InitialProfile {
    fn cell_values(&self, mesh: &Mesh) -> Result<Vec<f64>, ModelError> {
        match self {
            InitialProfile::Constant(c) => Ok(vec![*c; mesh.num_cells()]),
            InitialProfile::LinearX { left, right } => {
                let (x0, x1) = mesh
                    .vertices()
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[0]), b.max(p[0])));
                // exact cell mean of a linear function
                Ok(mesh
                    .cells()
                    .iter()
                    .map(|c| left + (right - left) * (c.centroid[0] - x0) / (x1 - x0))
                    .collect())
            }
            InitialProfile::Tabulated(v) => {
                if v.len() != mesh.num_cells() {
                    return Err(ModelError::InvalidConfig(format!(
                        "tabulated profile has {} values, mesh has {} cells",
                        v.len(),
                        mesh.num_cells()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Cell means of the initial profiles, with `Φ⁰` from one Poisson solve.
pub fn initial_state(
    mesh: &Mesh,
    config: &ModelConfig,
    bc: &BoundaryData,
    profiles: &[InitialProfile],
) -> Result<State, ModelError> {
    config.validate(mesh)?;
    bc.validate(mesh, config.num_species())?;
    if profiles.len() != config.num_species() {
        return Err(ModelError::InvalidConfig(format!(
            "{} initial profiles for {} species",
            profiles.len(),
            config.num_species()
        )));
    }
    let u = profiles.iter().map(|p| p.cell_values(mesh)).collect::<Result<Vec<_>, _>>()?;
    for k in 0..mesh.num_cells() {
        let mut sum = config.immobile[k];
        for (i, ui) in u.iter().enumerate() {
            if !(ui[k] >= 0.0) {
                return Err(ModelError::InvalidData {
                    cell: k,
                    message: format!("initial concentration of species {i} is {}", ui[k]),
                });
            }
            sum += ui[k];
        }
        if sum > 1.0 + 1e-14 {
            return Err(ModelError::InvalidData {
                cell: k,
                message: format!("initial concentrations sum to {sum} > 1"),
            });
        }
    }
    let phi = solve_poisson(mesh, config, bc, &u)?;
    Ok(State::new(u, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, BoundaryKind, Rect, SideMarkers};
    use crate::model::Species;

    fn setup() -> (Mesh, ModelConfig) {
        let mesh = build_structured_mesh(4, 2, Rect::new(0.0, 0.0, 2.0, 1.0), SideMarkers::left_right_dirichlet()).unwrap();
        let cfg = ModelConfig::new(vec![Species::new("a", 0.0, 1.0), Species::new("b", 0.0, 1.0)], 1.0, 1.0, 8);
        (mesh, cfg)
    }

    #[test]
    fn constant_profiles() {
        let (mesh, cfg) = setup();
        let bc = BoundaryData::uniform(&mesh, &[0.1, 0.2], 0.0);
        let s = initial_state(&mesh, &cfg, &bc, &[InitialProfile::Constant(0.1), InitialProfile::Constant(0.2)]).unwrap();
        assert!(s.u[0].iter().all(|v| *v == 0.1));
        assert!(s.u[1].iter().all(|v| *v == 0.2));
        assert!(s.phi.iter().all(|p| p.abs() < 1e-14));
    }

    #[test]
    fn simplex_violation_names_a_cell() {
        let (mesh, cfg) = setup();
        let bc = BoundaryData::uniform(&mesh, &[0.1, 0.2], 0.0);
        let r = initial_state(&mesh, &cfg, &bc, &[InitialProfile::Constant(0.6), InitialProfile::Constant(0.6)]);
        assert!(matches!(r, Err(ModelError::InvalidData { cell: 0, .. })));
    }

    #[test]
    fn linear_profile_matches_center_values() {
        let (mesh, cfg) = setup();
        let bc = BoundaryData::uniform(&mesh, &[0.1, 0.2], 0.0);
        let s = initial_state(
            &mesh,
            &cfg,
            &bc,
            &[InitialProfile::LinearX { left: 0.1, right: 0.5 }, InitialProfile::Constant(0.2)],
        )
        .unwrap();
        for (k, c) in mesh.cells().iter().enumerate() {
            let exact = 0.1 + 0.4 * c.center[0] / 2.0;
            assert!((s.u[0][k] - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn tabulated_length_is_checked() {
        let mesh = build_structured_mesh(2, 1, Rect::unit(), SideMarkers::all(BoundaryKind::Neumann)).unwrap();
        let cfg = ModelConfig::new(vec![Species::new("a", 0.0, 1.0)], 1.0, 1.0, 2);
        let bc = BoundaryData::uniform(&mesh, &[0.1], 0.0);
        assert!(initial_state(&mesh, &cfg, &bc, &[InitialProfile::Tabulated(vec![0.1])]).is_err());
    }
}
