//! Small dense linear-algebra helpers with condition monitoring.

use nalgebra::{DMatrix, DVector};

use crate::error::{ElError, Result};

/// Reciprocal condition number below which a matrix is treated as singular.
pub const RCOND_MIN: f64 = 1e-12;

/// Reciprocal condition number of a symmetric matrix from its eigenvalues.
pub fn sym_rcond(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v.abs()));
    if max == 0.0 || !max.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Inverse of a symmetric positive (semi-)definite matrix.
///
/// Fails with `SingularMatrix` when the reciprocal condition number drops
/// below [`RCOND_MIN`] or the Cholesky factorization breaks down.
pub fn sym_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(m);
    let rcond = sym_rcond(&sym);
    if !(rcond >= RCOND_MIN) {
        return Err(ElError::SingularMatrix { rcond });
    }
    match sym.clone().cholesky() {
        Some(ch) => Ok(symmetrize(&ch.inverse())),
        None => Err(ElError::SingularMatrix { rcond }),
    }
}

/// Inverse of a general square matrix, guarded by the singular-value ratio.
pub fn general_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    let rcond = if max > 0.0 { min / max } else { 0.0 };
    if !(rcond >= RCOND_MIN) {
        return Err(ElError::SingularMatrix { rcond });
    }
    m.clone()
        .try_inverse()
        .ok_or(ElError::SingularMatrix { rcond })
}

/// Solve `m x = b` for symmetric positive-definite `m`.
///
/// Falls back to a clipped eigen-decomposition pseudo-solve when Cholesky
/// fails, which keeps Newton iterations alive on nearly collinear data.
pub fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = m.clone().cholesky() {
        return ch.solve(b);
    }
    let eig = symmetrize(m).symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let floor = max * 1e-14;
    let mut out = DVector::zeros(b.len());
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > floor {
            let v = eig.eigenvectors.column(j);
            out += v * (v.dot(b) / lam);
        }
    }
    out
}

/// `(m + mᵀ)/2`
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric square root of a positive semi-definite matrix.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Max-norm of a slice.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
}
