//! Dense symmetric linear algebra: eigendecompositions (full and top-k),
//! simplex thresholding, and the matrix types everything else consumes.
//!
//! All routines are deterministic functions of their inputs (iterative
//! methods take an explicit seed), so solver runs are reproducible from a
//! configuration file alone.

mod eigh;
mod simplex;

pub use eigh::{full_eigh, topk_eigh, topk_eigh_detailed, TopkEigh};
pub(crate) use eigh::topk_eigh_warm;
pub use simplex::{numerical_rank, project_simplex, simplex_threshold};

use crate::error::{invalid, Result};
use nalgebra::{DMatrix, DVector};

/// Relative asymmetry tolerated by [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A dense real symmetric `n x n` matrix.
///
/// Construction validates symmetry up to `1e-12 * max(1, max |a_ij|)` and
/// rejects non-finite entries; [`SymMatrix::symmetrize`] accepts any square
/// matrix and averages it with its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    mat: DMatrix<f64>,
}

impl SymMatrix {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(invalid(format!(
                "matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(invalid("matrix must be non-empty"));
        }
        let mut max_abs = 0.0f64;
        for &v in mat.iter() {
            if !v.is_finite() {
                return Err(invalid("matrix has non-finite entries"));
            }
            max_abs = max_abs.max(v.abs());
        }
        let tol = SYMMETRY_TOL * max_abs.max(1.0);
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                if (mat[(i, j)] - mat[(j, i)]).abs() > tol {
                    return Err(invalid(format!(
                        "matrix is not symmetric at ({i},{j}): {} vs {}",
                        mat[(i, j)],
                        mat[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { mat })
    }

    /// Builds a symmetric matrix as `(a + a^T) / 2`. Entries must be finite.
    pub fn symmetrize(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(invalid("symmetrize requires a non-empty square matrix"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let sym = (a + a.transpose()) * 0.5;
        Ok(Self { mat: sym })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Frobenius inner product `<A, B> = tr(A B)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.mat.dot(&other.mat)
    }

    pub fn matvec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mat * v
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, ij: (usize, usize)) -> &f64 {
        &self.mat[ij]
    }
}

/// The leading part of an eigendecomposition of a symmetric matrix:
/// `k` eigenpairs ordered by algebraically non-increasing eigenvalue.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one column per eigenvalue.
    pub eigenvectors: DMatrix<f64>,
    /// Residual bound satisfied on exit: `||A v - lambda v|| <=
    /// residual_tol * max(1, |lambda_1|)`.
    pub residual_tol: f64,
}

impl Spectrum {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.nrows()
    }

    /// `sum_i lambda_i v_i v_i^T` as a dense matrix.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(i);
            out.ger(lam, &v, &v, 1.0);
        }
        out
    }

    /// Largest departure from orthonormality, `||V^T V - I||_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        let k = self.k();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}
