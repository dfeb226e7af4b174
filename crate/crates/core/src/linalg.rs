//! Compressed-row sparse matrices and a direct LU solver.
//!
//! Factorization is delegated to faer's supernodal sparse LU. A CSR matrix
//! is handed to faer as the CSC layout of its transpose, so no copy of the
//! index arrays is made; solves then go through the transposed factors.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::Mat;
use thiserror::Error;

/// Errors from sparse factorization and solves.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinearSolveError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("right-hand side has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("structurally singular matrix: no pivot available at elimination step {step}")]
    StructurallySingular { step: usize },
    #[error("numerically singular matrix: non-finite solution component at row {row}")]
    NumericallySingular { row: usize },
    #[error("ill-conditioned system: residual {residual:e} exceeds bound {bound:e}")]
    IllConditioned { residual: f64, bound: f64 },
    #[error("factorization failed: {0}")]
    Factorization(String),
}

/// Square or rectangular sparse matrix in compressed row layout. Column
/// indices are sorted and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            scratch.sort_by_key(|&(j, _)| j);
            for &(j, v) in &scratch {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Zero-valued matrix with a prescribed pattern. Each row's column list
    /// must be strictly increasing.
    pub fn from_pattern(nrows: usize, ncols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        assert_eq!(row_ptr.len(), nrows + 1);
        assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        for i in 0..nrows {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            assert!(row.windows(2).all(|w| w[0] < w[1]), "row {i} not strictly sorted");
            assert!(row.iter().all(|&j| j < ncols));
        }
        let nnz = col_idx.len();
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Storage offset of entry `(i, j)` if it is part of the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let row = &self.col_idx[start..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|p| start + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Iterates `(col, value)` over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        dense
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            triplets.extend(self.row(i).map(|(j, v)| (j, i, v)));
        }
        Self::from_triplets(self.ncols, self.nrows, &triplets)
    }

    /// Largest absolute entry of `A - Aᵀ`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
            for (j, v) in t.row(i) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst
    }

    fn same_pattern(&self, row_ptr: &[usize], col_idx: &[usize]) -> bool {
        self.row_ptr == row_ptr && self.col_idx == col_idx
    }
}

/// Symbolic analysis cached per sparsity pattern, so that repeated
/// factorizations on a fixed mesh only redo the numeric phase.
#[derive(Debug, Clone)]
pub struct LuPattern {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: SymbolicLu<usize>,
}

impl LuPattern {
    pub fn analyze(a: &CsrMatrix) -> Result<Self, LinearSolveError> {
        check_square(a)?;
        let symbolic = SymbolicLu::try_new(transposed_symbolic(a))
            .map_err(|e| LinearSolveError::Factorization(format!("{e:?}")))?;
        Ok(Self {
            row_ptr: a.row_ptr.clone(),
            col_idx: a.col_idx.clone(),
            symbolic,
        })
    }

    pub fn matches(&self, a: &CsrMatrix) -> bool {
        a.same_pattern(&self.row_ptr, &self.col_idx)
    }
}

/// Numeric LU factors of a square CSR matrix.
#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    factors: Lu<usize, f64>,
}

impl SparseLu {
    pub fn factorize(a: &CsrMatrix) -> Result<Self, LinearSolveError> {
        let pattern = LuPattern::analyze(a)?;
        Self::factorize_with(a, &pattern)
    }

    /// Numeric factorization reusing a symbolic analysis of the same pattern.
    pub fn factorize_with(a: &CsrMatrix, pattern: &LuPattern) -> Result<Self, LinearSolveError> {
        check_square(a)?;
        assert!(pattern.matches(a), "symbolic analysis belongs to a different pattern");
        let mat = SparseColMatRef::new(transposed_symbolic(a), &a.values);
        let factors = Lu::try_new_with_symbolic(pattern.symbolic.clone(), mat).map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => {
                LinearSolveError::StructurallySingular { step: index }
            }
            other => LinearSolveError::Factorization(format!("{other:?}")),
        })?;
        Ok(Self { n: a.nrows, factors })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        if b.len() != self.n {
            return Err(LinearSolveError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        // The factors belong to Aᵀ.
        self.factors.solve_transpose_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        if let Some(row) = x.iter().position(|v| !v.is_finite()) {
            return Err(LinearSolveError::NumericallySingular { row });
        }
        Ok(x)
    }
}

fn check_square(a: &CsrMatrix) -> Result<(), LinearSolveError> {
    if a.nrows != a.ncols {
        return Err(LinearSolveError::NotSquare {
            rows: a.nrows,
            cols: a.ncols,
        });
    }
    Ok(())
}

fn transposed_symbolic(a: &CsrMatrix) -> SymbolicSparseColMatRef<'_, usize> {
    SymbolicSparseColMatRef::new_checked(a.ncols, a.nrows, &a.row_ptr, None, &a.col_idx)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Residual `b - A x`.
pub fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Solves `A x = b` by sparse LU with up to two rounds of iterative
/// refinement. The returned solution satisfies
/// `‖A x − b‖∞ ≤ 1e-12 · (1 + ‖b‖∞)`.
pub fn solve_linear(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
    let lu = SparseLu::factorize(a)?;
    solve_refined(a, &lu, b)
}

/// Solve with existing factors of `a`, refining until the residual bound of
/// [`solve_linear`] holds.
pub fn solve_refined(a: &CsrMatrix, lu: &SparseLu, b: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
    let bound = 1e-12 * (1.0 + inf_norm(b));
    let mut x = lu.solve(b)?;
    let mut r = residual(a, &x, b);
    for _ in 0..2 {
        if inf_norm(&r) <= bound {
            break;
        }
        let dx = lu.solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        r = residual(a, &x, b);
    }
    let res = inf_norm(&r);
    if res > bound {
        return Err(LinearSolveError::IllConditioned { residual: res, bound });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 0, 2.0), (0, 1, 3.0), (1, 0, -1.0)]);
        assert_eq!(a.row_ptr(), &[0, 2, 3]);
        assert_eq!(a.col_idx(), &[0, 1, 0]);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.5, 0.0, 1e-3];
        assert_eq!(solve_linear(&a, &b).unwrap(), b);
    }

    #[test]
    fn two_cell_poisson_block_hand_solution() {
        // Two unit cells in a row, Dirichlet Φ̄ = 0 on the left face and
        // Φ̄ = 1 on the right face, λ² = 1, no charge. Boundary half-cells
        // have d = 1/2, so τ = 2 there and τ = 1 in between.
        // [3 -1; -1 3] Φ = [0; 2] → Φ = (1/4, 3/4).
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 3.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 3.0)]);
        let x = solve_linear(&a, &[0.0, 2.0]).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-15);
        assert!((x[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn random_spd_matches_dense_oracle() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| {
            if rng.random::<f64>() < 0.15 {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let spd = &g * g.transpose() + nalgebra::DMatrix::<f64>::identity(n, n) * 0.5;
        let b = nalgebra::DVector::<f64>::from_fn(n, |i, _| (i as f64).sin());
        let oracle = spd.clone().cholesky().unwrap().solve(&b);

        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if spd[(i, j)] != 0.0 {
                    triplets.push((i, j, spd[(i, j)]));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &triplets);
        let x = solve_linear(&a, b.as_slice()).unwrap();
        for i in 0..n {
            assert!((x[i] - oracle[i]).abs() < 1e-10, "row {i}: {} vs {}", x[i], oracle[i]);
        }
    }

    #[test]
    fn nonsymmetric_solve_uses_transposed_factors_correctly() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 4.0), (0, 2, 1.0), (1, 0, 2.0), (1, 1, 5.0), (2, 1, -1.0), (2, 2, 3.0)]);
        let b = [1.0, 2.0, 3.0];
        let x = solve_linear(&a, &b).unwrap();
        let r = residual(&a, &x, &b);
        assert!(inf_norm(&r) < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let err = solve_linear(&a, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(
            err,
            LinearSolveError::NumericallySingular { .. }
                | LinearSolveError::StructurallySingular { .. }
                | LinearSolveError::IllConditioned { .. }
        ));
    }

    #[test]
    fn symbolic_reuse_gives_same_answer() {
        let mut a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)]);
        let pattern = LuPattern::analyze(&a).unwrap();
        a.values_mut().iter_mut().for_each(|v| *v *= 2.0);
        let lu = SparseLu::factorize_with(&a, &pattern).unwrap();
        let x = lu.solve(&[2.0, 0.0, 2.0]).unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
    }
}
