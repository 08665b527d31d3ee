//! Symmetric sparse matrices in compressed-row form and a direct Cholesky solver.
//!
//! The pattern is shared between the stiffness matrix and the contact increments (every
//! contact coupling lives inside one triangle), so the symbolic factorization is computed
//! once per mesh and reused by every contact iteration.

use std::sync::Arc;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Conj, Mat, Side};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinearSolveError {
    #[error("matrix is not positive definite (pivot {pivot} of {size})")]
    NotPositiveDefinite { pivot: usize, size: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
}

/// Structurally symmetric row pattern with sorted column indices.
#[derive(Debug, PartialEq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Pattern coupling every pair of dofs that share an element.
    pub fn from_elements<'a>(n: usize, elements: impl Iterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for dofs in elements {
            for &i in dofs {
                rows[i].extend_from_slice(dofs);
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.push(i);
            row.sort_unstable();
            row.dedup();
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for row in rows {
            col_idx.extend_from_slice(&row);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern { n, row_ptr, col_idx }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.row(i).binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }
}

/// Sparse matrix over a shared symmetric pattern. Both triangles are stored.
#[derive(Clone, Debug)]
pub struct SparseSymmetricMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SparseSymmetricMatrix { pattern, values }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn size(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// # Panics
    ///
    /// Panics if `(i, j)` is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .pattern
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[p] += v;
    }

    /// Adds a dense row-major block `local[a * dofs.len() + b]` at `(dofs[a], dofs[b])`.
    pub fn add_block(&mut self, dofs: &[usize], local: &[f64]) {
        let n = dofs.len();
        for (a, &i) in dofs.iter().enumerate() {
            for (b, &j) in dofs.iter().enumerate() {
                self.add(i, j, local[a * n + b]);
            }
        }
    }

    pub fn add_assign(&mut self, other: &SparseSymmetricMatrix) {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.size())
            .map(|i| {
                let range = self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1];
                self.pattern.col_idx[range.clone()]
                    .iter()
                    .zip(&self.values[range])
                    .map(|(&j, v)| v * x[j])
                    .sum()
            })
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.size() {
            for (k, &j) in self.pattern.row(i).iter().enumerate() {
                if j > i {
                    let v = self.values[self.pattern.row_ptr[i] + k];
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst
    }

    /// Eliminates constrained dofs: moves their known values to the right-hand side, zeroes
    /// their rows and columns and puts a unit on the diagonal.
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], constrained: &[bool], values: &[f64]) {
        let n = self.size();
        for i in 0..n {
            let range = self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1];
            for p in range {
                let j = self.pattern.col_idx[p];
                if constrained[j] && !constrained[i] {
                    rhs[i] -= self.values[p] * values[j];
                }
                if constrained[i] || constrained[j] {
                    self.values[p] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        for i in 0..n {
            if constrained[i] {
                rhs[i] = values[i];
            }
        }
    }

    fn to_faer(&self) -> SparseColMat<usize, f64> {
        // The matrix is symmetric, so the row-compressed arrays are also its column-compressed
        // arrays.
        let symbolic = SymbolicSparseColMat::new_checked(
            self.size(),
            self.size(),
            self.pattern.row_ptr.clone(),
            None,
            self.pattern.col_idx.clone(),
        );
        SparseColMat::new(symbolic, self.values.clone())
    }
}

/// Sparse LLT with a fill-reducing ordering computed once per pattern.
#[derive(Debug)]
pub struct CholeskySolver {
    pattern: Arc<SparsityPattern>,
    symbolic: SymbolicLlt<usize>,
}

impl CholeskySolver {
    pub fn new(pattern: Arc<SparsityPattern>) -> Result<Self, LinearSolveError> {
        let probe = SparseSymmetricMatrix::zeros(pattern.clone()).to_faer();
        let symbolic = SymbolicLlt::try_new(probe.symbolic(), Side::Lower)
            .map_err(|e| LinearSolveError::Factorization(format!("{e:?}")))?;
        Ok(CholeskySolver { pattern, symbolic })
    }

    pub fn solve(&self, matrix: &SparseSymmetricMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinearSolveError> {
        assert!(**matrix.pattern() == *self.pattern, "matrix pattern differs from the factorized one");
        let a = matrix.to_faer();
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), a.as_ref(), Side::Lower).map_err(|e| {
            match e {
                faer::sparse::linalg::LltError::Numeric(faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot {
                    index,
                }) => LinearSolveError::NotPositiveDefinite { pivot: index, size: matrix.size() },
                other => LinearSolveError::Factorization(format!("{other:?}")),
            }
        })?;
        let mut x = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        llt.solve_in_place_with_conj(Conj::No, x.as_mut());
        let out: Vec<f64> = (0..rhs.len()).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(LinearSolveError::Factorization("non-finite solution".into()));
        }
        Ok(out)
    }
}
