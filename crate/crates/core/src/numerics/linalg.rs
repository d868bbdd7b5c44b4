use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold on eigenvalues below which a matrix is not treated as SPD.
const EPS_SPD: f64 = 1e-12;

/// Relative threshold on singular values for column-rank checks.
pub const EPS_RANK: f64 = 1e-10;

/// A dense symmetric matrix. Symmetry is checked exactly on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, found {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for a in 0..n {
            for b in (a + 1)..n {
                if m[(a, b)] != m[(b, a)] {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Symmetrizes `m` as `(m + m^T) / 2`. Use for products that are symmetric
    /// in exact arithmetic but not bit-for-bit.
    pub fn symmetrize(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, found {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let t = m.transpose();
        Ok(SymMatrix((m + t) * 0.5))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Inverse symmetric square root `A^{-1/2}` of an SPD matrix.
///
/// Eigenvalues at or below `1e-12` times the largest eigenvalue are rejected
/// with [`Error::NotSpd`].
pub fn sym_inv_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = SymmetricEigen::new(a.0.clone());
    let largest = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let smallest = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(largest > 0.0) || smallest <= EPS_SPD * largest {
        return Err(Error::NotSpd {
            min_eigenvalue: smallest,
        });
    }
    let scaled = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
    let q = &eig.eigenvectors;
    let b = q * DMatrix::from_diagonal(&scaled) * q.transpose();
    SymMatrix::symmetrize(b)
}

/// Inverse of an SPD matrix via Cholesky.
pub fn spd_inverse(a: &SymMatrix) -> Result<SymMatrix> {
    let chol = a
        .0
        .clone()
        .cholesky()
        .ok_or(Error::NotSpd { min_eigenvalue: f64::NAN })?;
    SymMatrix::symmetrize(chol.inverse())
}

/// Fails with [`Error::RankDeficient`] unless `m` has full column rank, using a
/// relative singular-value threshold of [`EPS_RANK`].
pub fn check_full_column_rank(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.ncols() == 0 || m.ncols() > m.nrows() {
        return Err(Error::RankDeficient(what));
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(largest > 0.0) || smallest <= EPS_RANK * largest {
        return Err(Error::RankDeficient(what));
    }
    Ok(())
}
