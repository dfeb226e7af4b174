use super::{Mesh, MeshError, Point};

/// Piecewise-constant function on the cells, optionally carrying one trace
/// value per Dirichlet edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub values: Vec<f64>,
    pub traces: Option<Vec<f64>>,
}

impl CellField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values, traces: None }
    }

    pub fn with_traces(values: Vec<f64>, traces: Vec<f64>) -> Self {
        Self {
            values,
            traces: Some(traces),
        }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self::new(vec![c; mesh.num_cells()])
    }

    /// Samples `f` at every cell center.
    pub fn from_centers(mesh: &Mesh, f: impl Fn(Point) -> f64) -> Self {
        Self::new(mesh.cells().iter().map(|c| f(c.center)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, mesh: &Mesh) -> Result<(), MeshError> {
        if self.values.len() != mesh.num_cells() {
            return Err(MeshError::FieldSize {
                expected: mesh.num_cells(),
                got: self.values.len(),
            });
        }
        if let Some(t) = &self.traces {
            if t.len() != mesh.num_dirichlet() {
                return Err(MeshError::Structure(format!(
                    "field carries {} Dirichlet traces, mesh has {} Dirichlet edges",
                    t.len(),
                    mesh.num_dirichlet()
                )));
            }
        }
        Ok(())
    }

    /// `∫_Ω v dx` for the piecewise-constant function.
    pub fn integral(&self, mesh: &Mesh) -> f64 {
        self.values.iter().zip(mesh.cells()).map(|(v, c)| v * c.measure).sum()
    }
}
