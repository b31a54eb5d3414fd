//! Dense complex vector/matrix arithmetic used throughout the design
//! pipeline: Hermitian eigendecomposition, PSD tests and the
//! complex-to-real "realification" map consumed by the conic solver.
//!
//! All matrices here are small (dimensions well below a hundred), so
//! everything is dense and eager.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use thiserror::Error;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;

/// Dense complex column vector (channels, beamformers, steering vectors).
pub type CVector = DVector<C64>;

/// Relative tolerance for the conjugate-symmetry check in [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("symmetry violation: max |A - A^H| = {violation:.3e} exceeds {tol:.3e} (relative)")]
    NotHermitian { violation: f64, tol: f64 },
}

/// Square complex matrix with conjugate symmetry enforced at construction.
///
/// Carrier for the design variables T, R_x and the ideal covariance R_d.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: DMatrix<C64>,
}

impl HermitianMatrix {
    /// Validates conjugate symmetry (within [`HERMITIAN_TOL`] relative to the
    /// Frobenius norm) and symmetrizes the round-off away.
    pub fn new(mat: DMatrix<C64>) -> Result<Self, LinalgError> {
        if mat.nrows() != mat.ncols() {
            return Err(LinalgError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let scale = mat.norm().max(1.0);
        let mut violation: f64 = 0.0;
        for i in 0..mat.nrows() {
            for j in i..mat.ncols() {
                violation = violation.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        if violation > HERMITIAN_TOL * scale {
            return Err(LinalgError::NotHermitian {
                violation: violation / scale,
                tol: HERMITIAN_TOL,
            });
        }
        Ok(Self::symmetrized(mat))
    }

    /// Builds `(A + A^H) / 2` without a symmetry check. All Hermitian
    /// matrices in the pipeline arise from arithmetic that can break
    /// symmetry at machine precision, so inputs are always symmetrized.
    pub fn symmetrized(mat: DMatrix<C64>) -> Self {
        let herm = (&mat + mat.adjoint()).scale(0.5);
        Self { mat: herm }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    /// Diagonal matrix from real entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = C64::new(d, 0.0);
        }
        Self { mat }
    }

    /// Rank-one Gram matrix `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        Self {
            mat: v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.scale(factor),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
        }
    }

    /// Real quadratic form `v^H A v`.
    pub fn quadratic_form(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.mat * v)[(0, 0)].re
    }

    /// Matrix-vector product `A v`.
    pub fn mul_vec(&self, v: &CVector) -> CVector {
        &self.mat * v
    }

    /// Real trace inner product `Re Tr(A^H B) = Tr(A B)` for Hermitian A, B.
    pub fn dot(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.mat.iter().zip(other.mat.iter()) {
            acc += a.re * b.re + a.im * b.im;
        }
        acc
    }

    /// Eigendecomposition with eigenvalues sorted in descending order and
    /// orthonormal eigenvectors (columns of the returned list).
    pub fn eigendecompose(&self) -> (Vec<f64>, Vec<CVector>) {
        let eig = SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("non-finite eigenvalue")
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        (values, vectors)
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = SymmetricEigen::new(self.mat.clone());
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `true` iff the smallest eigenvalue is at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// Real symmetric `[[Re A, -Im A], [Im A, Re A]]` of dimension `2*dim`.
    ///
    /// The realification is PSD iff the source is PSD, and every eigenvalue
    /// of the source appears twice.
    pub fn realify(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let z = self.mat[(i, j)];
                out[(i, j)] = z.re;
                out[(i + d, j + d)] = z.re;
                out[(i, j + d)] = -z.im;
                out[(i + d, j)] = z.im;
            }
        }
        out
    }
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn sym_min_eigenvalue(mat: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(mat.clone());
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Cholesky with escalating diagonal regularization on breakdown.
pub fn regularized_cholesky(mat: &DMatrix<f64>) -> Option<(Cholesky<f64, nalgebra::Dyn>, f64)> {
    let mut reg = 0.0;
    let scale = mat.diagonal().amax().max(1.0);
    for attempt in 0..8 {
        let candidate = if reg == 0.0 {
            mat.clone()
        } else {
            let mut m = mat.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += reg;
            }
            m
        };
        if let Some(chol) = Cholesky::new(candidate) {
            return Some((chol, reg));
        }
        reg = if attempt == 0 { 1e-12 * scale } else { reg * 100.0 };
    }
    None
}
