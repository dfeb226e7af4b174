//! Residual and Jacobian of the coupled implicit Euler system.
//!
//! Unknowns are ordered cell by cell, `(u_{1,K}, …, u_{n,K}, Φ_K)`. The
//! Jacobian pattern couples each cell block with itself and its interior
//! neighbours; with no Dirichlet edge the Poisson row of cell 0 is replaced
//! by the zero-mean condition `Σ_K m(K) Φ_K = 0`.

use rayon::prelude::*;

use super::kernel::{edge_flux_with_gradient, EdgeSides};
use crate::linalg::CsrMatrix;
use crate::mesh::{EdgeKind, Mesh};
use crate::model::{BoundaryData, ModelConfig};

/// Largest supported block size `n + 1`.
pub const MAX_BLOCK: usize = 32;

/// Precomputed sparsity information for one mesh and species count.
#[derive(Debug, Clone)]
pub struct Assembler {
    n: usize,
    num_cells: usize,
    neighbors: Vec<Vec<usize>>,
    gauge: bool,
    pattern: CsrMatrix,
}

impl Assembler {
    pub fn new(mesh: &Mesh, n: usize) -> Self {
        assert!((1..MAX_BLOCK).contains(&n), "species count {n} outside 1..{MAX_BLOCK}");
        let b = n + 1;
        let nc = mesh.num_cells();
        let mut neighbors: Vec<Vec<usize>> = (0..nc).map(|k| vec![k]).collect();
        for (_, e) in mesh.interior_edges() {
            if let EdgeKind::Interior { k, l } = e.kind {
                neighbors[k].push(l);
                neighbors[l].push(k);
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        let gauge = !mesh.has_dirichlet();
        let mut row_ptr = Vec::with_capacity(nc * b + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (k, nb) in neighbors.iter().enumerate() {
            for r in 0..b {
                if gauge && k == 0 && r == n {
                    col_idx.extend((0..nc).map(|c| c * b + n));
                } else {
                    for &l in nb {
                        col_idx.extend(l * b..l * b + b);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let pattern = CsrMatrix::from_pattern(nc * b, nc * b, row_ptr, col_idx);
        Self { n, num_cells: nc, neighbors, gauge, pattern }
    }

    pub fn num_species(&self) -> usize {
        self.n
    }

    pub fn num_unknowns(&self) -> usize {
        self.num_cells * (self.n + 1)
    }

    /// True when the zero-mean row replaces a Poisson row.
    pub fn gauged(&self) -> bool {
        self.gauge
    }

    /// A matrix with the Jacobian pattern and zero values.
    pub fn pattern(&self) -> CsrMatrix {
        self.pattern.clone()
    }

    pub fn residual(
        &self,
        x: &[f64],
        x_old: &[f64],
        dt: f64,
        mesh: &Mesh,
        config: &ModelConfig,
        bc: &BoundaryData,
    ) -> Vec<f64> {
        self.evaluate(x, x_old, dt, mesh, config, bc, None)
    }

    /// Residual, with the Jacobian values written into `jac`, which must
    /// carry the pattern of [`Assembler::pattern`].
    #[allow(clippy::too_many_arguments)]
    pub fn residual_and_jacobian(
        &self,
        x: &[f64],
        x_old: &[f64],
        dt: f64,
        mesh: &Mesh,
        config: &ModelConfig,
        bc: &BoundaryData,
        jac: &mut CsrMatrix,
    ) -> Vec<f64> {
        assert_eq!(jac.row_ptr(), self.pattern.row_ptr(), "Jacobian pattern mismatch");
        self.evaluate(x, x_old, dt, mesh, config, bc, Some(jac))
    }

    #[allow(clippy::too_many_arguments)]
    fn evaluate(
        &self,
        x: &[f64],
        x_old: &[f64],
        dt: f64,
        mesh: &Mesh,
        config: &ModelConfig,
        bc: &BoundaryData,
        jac: Option<&mut CsrMatrix>,
    ) -> Vec<f64> {
        let n = self.n;
        let b = n + 1;
        assert_eq!(x.len(), self.num_unknowns());
        assert_eq!(x_old.len(), self.num_unknowns());
        let want_jac = jac.is_some();
        let u0: Vec<f64> = (0..self.num_cells)
            .map(|k| 1.0 - x[k * b..k * b + n].iter().sum::<f64>() - config.immobile[k])
            .collect();

        // edge pass: fluxes (and local gradients) of every species
        let stride = if want_jac { n * (1 + 2 * b) } else { n };
        let mut edge_data = vec![0.0; mesh.num_edges() * stride];
        edge_data
            .par_chunks_mut(stride)
            .with_min_len(512)
            .enumerate()
            .for_each(|(e, out)| {
                let edge = mesh.edge(e);
                let (k, sides, ul): (usize, EdgeSides, std::borrow::Cow<[f64]>) = match edge.kind {
                    EdgeKind::Neumann { .. } => return,
                    EdgeKind::Interior { k, l } => (
                        k,
                        EdgeSides {
                            tau: edge.transmissibility,
                            u0k: u0[k],
                            u0l: u0[l],
                            phik: x[k * b + n],
                            phil: x[l * b + n],
                        },
                        std::borrow::Cow::Borrowed(&x[l * b..l * b + n]),
                    ),
                    EdgeKind::Dirichlet { cell, slot } => (
                        cell,
                        EdgeSides {
                            tau: edge.transmissibility,
                            u0k: u0[cell],
                            u0l: bc.solvent(slot),
                            phik: x[cell * b + n],
                            phil: bc.phi[slot],
                        },
                        std::borrow::Cow::Owned(bc.u.iter().map(|ui| ui[slot]).collect()),
                    ),
                };
                let uk = &x[k * b..k * b + n];
                let (fluxes, grads) = out.split_at_mut(n);
                let mut scratch = [0.0f64; 2 * MAX_BLOCK];
                for (i, sp) in config.species.iter().enumerate() {
                    let g: &mut [f64] = if want_jac { &mut grads[i * 2 * b..(i + 1) * 2 * b] } else { &mut scratch[..2 * b] };
                    fluxes[i] = edge_flux_with_gradient(&sides, uk, &ul, i, sp.d, sp.z, config.beta, config.drift_enabled, g).flux;
                }
            });

        // cell gather: each cell owns its rows
        let mut res = vec![0.0; self.num_unknowns()];
        let lambda2 = config.lambda2;
        let gather = |c: usize, r: &mut [f64], mut jrows: Option<&mut [f64]>| {
            let cell = mesh.cell(c);
            let m = cell.measure;
            let nb = &self.neighbors[c];
            let row_len = nb.len() * b;
            let slot_of = |cell: usize| nb.iter().position(|&v| v == cell).unwrap();
            let own = slot_of(c);
            let skip_poisson = self.gauge && c == 0;
            let phic = x[c * b + n];
            for i in 0..n {
                r[i] = m * (x[c * b + i] - x_old[c * b + i]) / dt;
            }
            let mut charge = config.background[c];
            for (i, sp) in config.species.iter().enumerate() {
                charge += sp.z * x[c * b + i];
            }
            r[n] = -m * charge;
            if let Some(j) = jrows.as_deref_mut() {
                j.fill(0.0);
                for i in 0..n {
                    j[i * row_len + own * b + i] = m / dt;
                    if !skip_poisson {
                        j[n * row_len + own * b + i] = -m * config.species[i].z;
                    }
                }
            }
            for &e in &cell.edges {
                let edge = mesh.edge(e);
                let data = &edge_data[e * stride..(e + 1) * stride];
                let (sign, other, kslot, lslot) = match edge.kind {
                    EdgeKind::Neumann { .. } => continue,
                    EdgeKind::Interior { k, l } => {
                        let (sign, other) = if k == c { (1.0, Some(l)) } else { (-1.0, Some(k)) };
                        (sign, other, Some(slot_of(k)), Some(slot_of(l)))
                    }
                    EdgeKind::Dirichlet { .. } => (1.0, None, Some(own), None),
                };
                for i in 0..n {
                    r[i] += sign * data[i];
                }
                let lt = lambda2 * edge.transmissibility;
                let phio = match (other, edge.kind) {
                    (Some(o), _) => x[o * b + n],
                    (None, EdgeKind::Dirichlet { slot, .. }) => bc.phi[slot],
                    _ => unreachable!(),
                };
                r[n] -= lt * (phio - phic);
                if let Some(j) = jrows.as_deref_mut() {
                    for i in 0..n {
                        let g = &data[n + i * 2 * b..n + (i + 1) * 2 * b];
                        let row = &mut j[i * row_len..(i + 1) * row_len];
                        if let Some(ks) = kslot {
                            for (q, gv) in g[..b].iter().enumerate() {
                                row[ks * b + q] += sign * gv;
                            }
                        }
                        if let Some(ls) = lslot {
                            for (q, gv) in g[b..].iter().enumerate() {
                                row[ls * b + q] += sign * gv;
                            }
                        }
                    }
                    if !skip_poisson {
                        let row = &mut j[n * row_len..(n + 1) * row_len];
                        row[own * b + n] += lt;
                        if let Some(o) = other {
                            row[slot_of(o) * b + n] -= lt;
                        }
                    }
                }
            }
        };

        match jac {
            None => res.par_chunks_mut(b).with_min_len(256).enumerate().for_each(|(c, r)| gather(c, r, None)),
            Some(jac) => {
                let row_ptr = jac.row_ptr().to_vec();
                let values = jac.values_mut();
                let mut slices = Vec::with_capacity(self.num_cells);
                let mut rest = values;
                for c in 0..self.num_cells {
                    let len = row_ptr[(c + 1) * b] - row_ptr[c * b];
                    let (head, tail) = rest.split_at_mut(len);
                    slices.push(head);
                    rest = tail;
                }
                res.par_chunks_mut(b)
                    .zip(slices.into_par_iter())
                    .with_min_len(256)
                    .enumerate()
                    .for_each(|(c, (r, jr))| {
                        if self.gauge && c == 0 {
                            // the zero-mean row is the last row of this block
                            let block_rows = n * self.neighbors[0].len() * b;
                            let (species_rows, gauge_row) = jr.split_at_mut(block_rows);
                            let mut padded = vec![0.0; b * self.neighbors[0].len() * b];
                            gather(c, r, Some(&mut padded));
                            species_rows.copy_from_slice(&padded[..block_rows]);
                            for (k, v) in gauge_row.iter_mut().enumerate() {
                                *v = mesh.cell(k).measure;
                            }
                        } else {
                            gather(c, r, Some(jr));
                        }
                    });
            }
        }
        if self.gauge {
            res[n] = (0..self.num_cells).map(|k| mesh.cell(k).measure * x[k * b + n]).sum();
        }
        res
    }
}
