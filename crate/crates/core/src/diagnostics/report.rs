use std::io::Write;

use super::{check_entropy_inequality, entropy, entropy_production, extrema, AprioriAccumulator, AprioriNorms, DiagnosticsError};
use crate::mesh::Mesh;
use crate::model::{ModelConfig, State};

/// Diagnostics of one time level. Quantities that are undefined for the
/// model (entropy production with unequal diffusion) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time: f64,
    pub entropy: Option<f64>,
    pub production: Option<f64>,
    pub entropy_defect: Option<f64>,
    pub relative_entropy: Option<f64>,
    pub masses: Vec<f64>,
    /// `(min, max)` of `u_0, u_1, …, u_n`.
    pub extrema: Vec<(f64, f64)>,
    pub norms: Option<AprioriNorms>,
}

/// Builds rows along a trajectory, carrying the a priori norm sums.
pub struct RowBuilder<'a> {
    mesh: &'a Mesh,
    config: &'a ModelConfig,
    acc: AprioriAccumulator,
}

impl<'a> RowBuilder<'a> {
    pub fn new(mesh: &'a Mesh, config: &'a ModelConfig) -> Result<Self, DiagnosticsError> {
        Ok(Self { mesh, config, acc: AprioriAccumulator::new(mesh, config.num_species())? })
    }

    pub fn initial(&self, state: &State) -> DiagnosticsRow {
        DiagnosticsRow {
            step: state.step,
            time: state.time,
            entropy: entropy(state, self.mesh, self.config).ok(),
            production: entropy_production(state, self.mesh, self.config).ok(),
            entropy_defect: None,
            relative_entropy: None,
            masses: state.masses(self.mesh),
            extrema: extrema(state, self.config),
            norms: None,
        }
    }

    pub fn step(&mut self, previous: &State, state: &State, dt: f64) -> Result<DiagnosticsRow, DiagnosticsError> {
        self.acc.push(previous, state, dt, self.mesh, self.config)?;
        let mut row = self.initial(state);
        row.entropy_defect = check_entropy_inequality(state, previous, dt, self.mesh, self.config).ok();
        row.norms = Some(self.acc.norms());
        Ok(row)
    }
}

/// One row per time level, initial level first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub num_species: usize,
    pub rows: Vec<DiagnosticsRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl DiagnosticsReport {
    pub fn new(num_species: usize) -> Self {
        Self { num_species, rows: Vec::new() }
    }

    pub fn header(&self) -> String {
        let n = self.num_species;
        let mut cols: Vec<String> = ["step", "time", "H", "I", "entropy_defect", "E_rel"].iter().map(|s| s.to_string()).collect();
        cols.extend((1..=n).map(|i| format!("mass_{i}")));
        for i in 0..=n {
            cols.push(format!("min_u{i}"));
            cols.push(format!("max_u{i}"));
        }
        cols.push("h1_sqrt_u0".into());
        cols.extend((1..=n).map(|i| format!("h1_sqrt_u0_u{i}")));
        cols.extend((1..=n).map(|i| format!("hm1_dt_u{i}")));
        cols.join(",")
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.header())?;
        let n = self.num_species;
        for r in &self.rows {
            let mut f = vec![
                r.step.to_string(),
                format!("{:e}", r.time),
                opt(r.entropy),
                opt(r.production),
                opt(r.entropy_defect),
                opt(r.relative_entropy),
            ];
            f.extend(r.masses.iter().map(|m| format!("{m:e}")));
            for (a, b) in &r.extrema {
                f.push(format!("{a:e}"));
                f.push(format!("{b:e}"));
            }
            match &r.norms {
                Some(nm) => {
                    f.push(format!("{:e}", nm.sqrt_u0));
                    f.extend(nm.sqrt_u0_ui.iter().map(|v| format!("{v:e}")));
                    f.extend(nm.time_derivative.iter().map(|v| format!("{v:e}")));
                }
                None => f.extend(std::iter::repeat_n(String::new(), 1 + 2 * n)),
            }
            writeln!(w, "{}", f.join(","))?;
        }
        Ok(())
    }
}
