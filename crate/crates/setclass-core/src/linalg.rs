//! Small shared linear-algebra helpers.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Iteration cap passed to nalgebra's iterative decompositions. The symmetric
/// QL sweep normally converges in a handful of iterations per eigenvalue; this
/// bound only exists so a pathological input surfaces as an error instead of a
/// hang.
fn eigen_iteration_cap(size: usize) -> usize {
    100 * size.max(10)
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// descending order and eigenvectors as the corresponding columns.
pub(crate) fn sorted_symmetric_eigen(matrix: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let size = matrix.nrows();
    let eigen = matrix
        .try_symmetric_eigen(f64::EPSILON, eigen_iteration_cap(size))
        .ok_or(Error::EigenFailed { size })?;

    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("eigenvalues of a finite symmetric matrix are finite")
    });

    let values: Vec<f64> = order.iter().map(|&k| eigen.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(size, size, |i, j| eigen.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Factor a symmetric positive semidefinite matrix as `F Fᵀ`.
///
/// Uses a Cholesky factor when the matrix is positive definite and falls back
/// to an eigenvalue factor with negative eigenvalues clamped to zero
/// otherwise. Eigenvalues below `-1e-8 * max` are rejected.
pub(crate) fn psd_factor(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = matrix.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let (values, vectors) = sorted_symmetric_eigen(matrix.clone())?;
    let max = values.first().copied().unwrap_or(0.0).max(0.0);
    let floor = -1e-8 * max.max(1.0);
    if values.iter().any(|&v| v < floor) {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: values.last().copied().unwrap_or(0.0),
        });
    }
    let mut factor = vectors;
    for (j, &v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    Ok(factor)
}

/// Largest entry of `|LᵀL - I|`, measuring how far the columns of `L` are
/// from orthonormal.
pub(crate) fn orthonormality_defect(basis: &DMatrix<f64>) -> f64 {
    let gram = basis.transpose() * basis;
    let mut defect = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((gram[(i, j)] - target).abs());
        }
    }
    defect
}

/// Mean of the columns of `matrix`.
pub(crate) fn column_mean(matrix: &DMatrix<f64>) -> DVector<f64> {
    let n = matrix.ncols();
    let mut mean = DVector::zeros(matrix.nrows());
    for j in 0..n {
        mean += matrix.column(j);
    }
    mean / n as f64
}
