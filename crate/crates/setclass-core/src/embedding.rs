//! Classical multidimensional scaling with a closed-form out-of-sample map.
//!
//! Fitting: given the `N × N` matrix `Δ` of squared distances, the doubly
//! centered matrix `B = -½ C Δ C` (with `C = I - N⁻¹𝟙𝟙ᵀ`) is eigendecomposed
//! and the training configuration is `Z = Λ₊^{1/2} Q₊ᵀ`, where `Λ₊` holds the
//! retained positive eigenvalues. `Z` minimizes the strain
//! `‖-½ C (D(Z) - Δ) C‖_F²` over `m`-dimensional configurations.
//!
//! Extension: a new point with squared distances `δ` to the training points is
//! mapped by forming the bordered matrix `Δ†`, projecting with
//! `P = I_{N+1} - N⁻¹ 𝟙_{N+1} [𝟙_Nᵀ; 0]` (which centers on the training
//! points), reading off the cross-product vector `b₁₂` from
//! `B† = -½ P Δ† Pᵀ`, and taking `z† = Λ₊^{-1/2} Q₊ᵀ b₁₂`. The coordinate
//! orthogonal to the training span is dropped. `z†` is a local minimum of the
//! extended strain whenever the residual `b₂ - z†ᵀz†` is nonnegative; a
//! negative residual means the new distances are inconsistent with any point
//! in the embedding space and is reported as a flag rather than an error.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::features::DistanceMatrix;
use crate::linalg::sorted_symmetric_eigen;
use crate::{Error, Result};

/// Default relative eigenvalue cutoff: eigenvalues of `B` at or below
/// `DEFAULT_EIG_TOL` times the largest are discarded as numerical noise.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Fitted classical-MDS state.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct EmbeddingModel {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    coordinates: DMatrix<f64>,
    delta: DistanceMatrix,
    psd_defect: f64,
}

impl EmbeddingModel {
    /// Retained eigenvalues of `B`, strictly positive and descending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `N × m` matrix of retained eigenvectors (`Q₊`).
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `m × N` training coordinates `Z = Λ₊^{1/2} Q₊ᵀ`; column `i` embeds the
    /// `i`-th training point.
    pub fn coordinates(&self) -> &DMatrix<f64> {
        &self.coordinates
    }

    /// The training squared-distance matrix the model was fitted on.
    pub fn delta(&self) -> &DistanceMatrix {
        &self.delta
    }

    /// Magnitude of the most negative eigenvalue of `B` (0 when `B` was
    /// positive semidefinite, i.e. the distances were Euclidean).
    pub fn psd_defect(&self) -> f64 {
        self.psd_defect
    }

    /// Embedding dimension `m`.
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of training points `N`.
    pub fn n_train(&self) -> usize {
        self.delta.len()
    }

    /// Maps a new point into the training configuration from its squared
    /// distances to the `N` training points.
    ///
    /// Entries must be nonnegative and finite, one per training point.
    pub fn extend(&self, squared_distances: &[f64]) -> Result<ExtendedPoint> {
        let n = self.n_train();
        if squared_distances.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: squared_distances.len(),
                context: "squared distances to the training points".into(),
            });
        }
        if let Some(bad) = squared_distances.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistances(alloc::format!(
                "squared distance {bad} is negative or non-finite"
            )));
        }

        // bordered squared-distance matrix
        let mut delta_ext = DMatrix::zeros(n + 1, n + 1);
        delta_ext.view_mut((0, 0), (n, n)).copy_from(self.delta.squared());
        for i in 0..n {
            delta_ext[(i, n)] = squared_distances[i];
            delta_ext[(n, i)] = squared_distances[i];
        }

        // projection centering on the training points only
        let mut projector: DMatrix<f64> = DMatrix::identity(n + 1, n + 1);
        for i in 0..=n {
            for j in 0..n {
                projector[(i, j)] -= 1.0 / n as f64;
            }
        }

        let bordered: DMatrix<f64> = (&projector * delta_ext * projector.transpose()) * -0.5;
        let b12 = bordered.view((0, n), (n, 1)).into_owned();
        let b2 = bordered[(n, n)];

        let mut coordinates = self.eigenvectors.transpose() * b12;
        for (k, mut row) in coordinates.row_iter_mut().enumerate() {
            row /= self.eigenvalues[k].sqrt();
        }
        let coordinates = DVector::from_column_slice(coordinates.as_slice());
        let residual = b2 - coordinates.norm_squared();
        Ok(ExtendedPoint {
            coordinates,
            residual,
        })
    }
}

/// Out-of-sample embedding of one new point.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedPoint {
    coordinates: DVector<f64>,
    residual: f64,
}

impl ExtendedPoint {
    /// Coordinates `z†` in the `m`-dimensional training configuration.
    pub fn coordinates(&self) -> &DVector<f64> {
        &self.coordinates
    }

    /// The slack `b₂ - z†ᵀz†`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// True when the residual is negative, i.e. the supplied distances are
    /// inconsistent with the embedding and `z†` is not guaranteed to be a
    /// local minimum of the extension loss.
    pub fn has_negative_residual(&self) -> bool {
        self.residual < 0.0
    }
}

/// Fits a classical-MDS embedding to a squared-distance matrix.
///
/// Eigenvalues of `B = -½CΔC` at or below `eig_tol` times the largest are
/// discarded; negative eigenvalues (the metric need not be Euclidean) are
/// dropped as well, with their magnitude recorded in
/// [`EmbeddingModel::psd_defect`]. Errors when no positive eigenvalue exists.
pub fn cmds_fit(delta: &DistanceMatrix, eig_tol: f64) -> Result<EmbeddingModel> {
    let n = delta.len();
    if n < 2 {
        return Err(Error::InvalidDistances(
            "an embedding needs at least two points".into(),
        ));
    }
    if eig_tol <= 0.0 || eig_tol.is_nan() || !eig_tol.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "eigenvalue tolerance must be a positive real, got {eig_tol}"
        )));
    }

    let squared = delta.squared();
    let row_means: Vec<f64> = (0..n).map(|i| squared.row(i).sum() / n as f64).collect();
    let grand_mean = row_means.iter().sum::<f64>() / n as f64;
    let centered = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (squared[(i, j)] - row_means[i] - row_means[j] + grand_mean)
    });

    let (values, vectors) = sorted_symmetric_eigen(centered)?;
    let largest = values[0];
    if largest <= 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    let cutoff = eig_tol * largest;
    let m = values.iter().take_while(|&&v| v > cutoff).count();
    let psd_defect = (-values[n - 1]).max(0.0);

    let eigenvalues = DVector::from_iterator(m, values[..m].iter().copied());
    let eigenvectors = vectors.columns(0, m).into_owned();
    let mut coordinates = eigenvectors.transpose();
    for (k, mut row) in coordinates.row_iter_mut().enumerate() {
        row *= eigenvalues[k].sqrt();
    }

    Ok(EmbeddingModel {
        eigenvalues,
        eigenvectors,
        coordinates,
        delta: delta.clone(),
        psd_defect,
    })
}
