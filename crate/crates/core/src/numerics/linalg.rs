//! Small dense symmetric-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Ratio of the smallest to the largest eigenvalue of a symmetric matrix
/// that is expected to be positive definite. Non-positive spectra give a
/// value `<= 0`.
pub fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return 0.0;
    }
    min / max
}

/// Inverse of a symmetric positive-definite matrix; `what` names it in errors.
pub fn spd_inverse(m: &DMatrix<f64>, min_rcond: f64, what: &str) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Identification(format!("{what} has non-finite entries")));
    }
    let rcond = reciprocal_condition(m);
    if !(rcond >= min_rcond) {
        return Err(Error::Identification(format!(
            "{what} is not positive definite or is ill-conditioned (reciprocal condition {rcond:e})"
        )));
    }
    let chol = m.clone().cholesky().ok_or_else(|| {
        Error::Identification(format!("{what} failed Cholesky factorization"))
    })?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}
