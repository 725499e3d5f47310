//! Per-set feature extraction and the canonical-angle subspace metric.
//!
//! Each set is summarized by its sample mean and the subspace spanned by its
//! leading principal components. Two subspaces `ℒ₁, ℒ₂` are compared through
//! their canonical angles `θ_ℓ = arccos γ_ℓ`, where `γ_ℓ` is the ℓ-th largest
//! singular value of `L₁ᵀL₂`, and the scaled Euclidean sine metric
//!
//! ```text
//! ρ_s(ℒ₁, ℒ₂) = c · (Σ_ℓ sin²θ_ℓ)^{1/2},   0 ≤ ρ_s ≤ c√r.
//! ```
//!
//! The scale constant `c` is chosen as the average total retained variance
//! across sets so that subspace distances are commensurate with the mean
//! features they are later combined with.
//!
//! Note the covariance convention: the per-set empirical covariance uses the
//! `1/n_i` denominator, not `1/(n_i - 1)`. Most linear-algebra libraries
//! default to the latter; all eigenvalue-based quantities here (retained
//! variances and the scale constant derived from them) assume `1/n_i`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::{column_mean, orthonormality_defect, sorted_symmetric_eigen};
use crate::set::ObservationSet;
use crate::{Error, Result};

/// Tolerance for the orthonormality invariant of a stored basis.
pub const BASIS_TOL: f64 = 1e-10;
/// Tolerance against which bases supplied to angle computations are checked.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;
/// Canonical angles below this threshold are snapped to exactly zero.
pub const ANGLE_SNAP: f64 = 1e-8;
/// Singular values within this of 1 count as exactly 1: the arccosine is so
/// steep near 1 that machine-precision noise in a singular value would
/// otherwise produce spurious angles around 1e-8.
const COSINE_SNAP: f64 = 1e-14;
/// Relative threshold below which a retained variance counts as degenerate.
const DEGENERATE_REL: f64 = 1e-12;

/// Mean vector, orthonormal principal-component basis and retained variances
/// of one set.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFeatures {
    mean: DVector<f64>,
    basis: DMatrix<f64>,
    variances: Vec<f64>,
}

impl SetFeatures {
    /// Assembles features from parts, validating the invariants: `basis` has
    /// orthonormal columns (within [`BASIS_TOL`]) and `variances` are
    /// nonnegative, nonincreasing and match the basis rank.
    pub fn new(mean: DVector<f64>, basis: DMatrix<f64>, variances: Vec<f64>) -> Result<Self> {
        if mean.len() != basis.nrows() {
            return Err(Error::DimensionMismatch {
                expected: basis.nrows(),
                found: mean.len(),
                context: "mean vector length vs basis rows".into(),
            });
        }
        if basis.ncols() != variances.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.ncols(),
                found: variances.len(),
                context: "number of variances vs basis columns".into(),
            });
        }
        let defect = orthonormality_defect(&basis);
        if defect > BASIS_TOL {
            return Err(Error::NotOrthonormal { defect });
        }
        if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::DegenerateScale(
                "variances must be finite and nonnegative".into(),
            ));
        }
        if variances.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::DegenerateScale("variances must be nonincreasing".into()));
        }
        Ok(Self {
            mean,
            basis,
            variances,
        })
    }

    /// Sample mean of the set.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// `p × r` orthonormal basis of the retained principal subspace.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Retained principal-component variances, nonincreasing.
    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Retained subspace dimension `r`.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Sum of the retained variances.
    pub fn total_variance(&self) -> f64 {
        self.variances.iter().sum()
    }

    /// True when some retained direction carries (numerically) zero variance,
    /// so the basis was completed arbitrarily rather than estimated.
    pub fn is_degenerate(&self) -> bool {
        let top = self.variances.first().copied().unwrap_or(0.0);
        self.variances
            .iter()
            .any(|&v| v <= DEGENERATE_REL * top.max(1e-300))
            || top == 0.0
    }

    /// Features restricted to the leading `r` components.
    pub fn truncate(&self, r: usize) -> Result<SetFeatures> {
        if r == 0 || r > self.rank() {
            return Err(Error::RankOutOfRange {
                requested: r,
                max: self.rank(),
            });
        }
        Ok(SetFeatures {
            mean: self.mean.clone(),
            basis: self.basis.columns(0, r).into_owned(),
            variances: self.variances[..r].to_vec(),
        })
    }
}

/// Extracts the mean and the rank-`r` principal subspace of a set.
///
/// The empirical covariance `Σ̂ = n⁻¹ Σ_j (x_j - μ̂)(x_j - μ̂)ᵀ` is
/// eigendecomposed; the basis columns are its top-`r` eigenvectors and the
/// variances its top-`r` eigenvalues. Requires `1 ≤ r ≤ min(p, n - 1)`.
///
/// When `p` exceeds the set size the decomposition is done on the `n × n`
/// Gram matrix instead, which has the same nonzero spectrum. Directions whose
/// variance is numerically zero are filled with a deterministic orthonormal
/// completion; [`SetFeatures::is_degenerate`] flags that case.
///
/// Eigenvector signs follow a fixed convention (largest-magnitude component
/// positive). Signs and eigenvalue tie order are irrelevant to every distance
/// computed from the basis, which depends on the span only.
pub fn extract_features(set: &ObservationSet, r: usize) -> Result<SetFeatures> {
    let p = set.dim();
    let n = set.n_observations();
    let max_rank = p.min(n.saturating_sub(1));
    if r == 0 || r > max_rank {
        return Err(Error::RankOutOfRange {
            requested: r,
            max: max_rank,
        });
    }

    let mean = column_mean(set.observations());
    let mut centered = set.observations().clone();
    for j in 0..n {
        centered.column_mut(j).axpy(-1.0, &mean, 1.0);
    }

    let (top_values, mut basis) = if p <= n {
        let cov = (&centered * centered.transpose()) / n as f64;
        let (values, vectors) = sorted_symmetric_eigen(cov)?;
        (
            values[..r].to_vec(),
            vectors.columns(0, r).into_owned(),
        )
    } else {
        // Gram trick: (1/n) XᵀX shares the nonzero spectrum of the covariance
        // and eigenvectors map back through X.
        let gram = (centered.transpose() * &centered) / n as f64;
        let (values, vectors) = sorted_symmetric_eigen(gram)?;
        let mut basis = DMatrix::zeros(p, r);
        for (k, &lambda) in values.iter().enumerate().take(r) {
            if lambda > DEGENERATE_REL * values[0].max(1e-300) {
                let u = &centered * vectors.column(k) / (n as f64 * lambda).sqrt();
                basis.set_column(k, &u);
            }
            // zero-variance columns are filled by the completion below
        }
        (values[..r].to_vec(), basis)
    };

    let variances: Vec<f64> = top_values.iter().map(|&v| v.max(0.0)).collect();
    complete_degenerate_columns(&mut basis, &variances);
    fix_signs(&mut basis);

    SetFeatures::new(mean, basis, variances)
}

/// Replaces columns associated with (numerically) zero variance by a
/// deterministic orthonormal completion built from standard basis vectors.
fn complete_degenerate_columns(basis: &mut DMatrix<f64>, variances: &[f64]) {
    let top = variances.first().copied().unwrap_or(0.0);
    let p = basis.nrows();
    for (k, &variance) in variances.iter().enumerate() {
        if variance > DEGENERATE_REL * top.max(1e-300) && basis.column(k).norm() > 0.5 {
            continue;
        }
        // Gram-Schmidt a standard basis vector against the preceding columns.
        let mut chosen = None;
        for e in 0..p {
            let mut candidate = DVector::zeros(p);
            candidate[e] = 1.0;
            for j in 0..k {
                let proj = basis.column(j).dot(&candidate);
                candidate.axpy(-proj, &basis.column(j).into_owned(), 1.0);
            }
            let norm = candidate.norm();
            if norm > 0.5 {
                chosen = Some(candidate / norm);
                break;
            }
        }
        let column = chosen.expect("fewer than p preceding columns always leave a completion");
        basis.set_column(k, &column);
    }
}

/// Sign convention: the largest-magnitude component of each column is
/// positive. Principal directions are axial, so this only pins a
/// representative.
fn fix_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let mut lead = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[lead].abs() {
                lead = i;
            }
        }
        if col[lead] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Canonical angles between the subspaces spanned by two orthonormal bases.
///
/// `l1` is `p × s`, `l2` is `p × r` with `r ≤ s`; returns `r` angles in
/// `[0, π/2]`, nondecreasing. Singular values are clamped to `[0, 1]` before
/// the arccosine and angles below [`ANGLE_SNAP`] are snapped to zero.
pub fn canonical_angles(l1: &DMatrix<f64>, l2: &DMatrix<f64>) -> Result<Vec<f64>> {
    if l1.nrows() != l2.nrows() {
        return Err(Error::DimensionMismatch {
            expected: l1.nrows(),
            found: l2.nrows(),
            context: "ambient dimension of the two bases".into(),
        });
    }
    if l2.ncols() > l1.ncols() {
        return Err(Error::DimensionMismatch {
            expected: l1.ncols(),
            found: l2.ncols(),
            context: "second basis may not span more dimensions than the first".into(),
        });
    }
    for basis in [l1, l2] {
        let defect = orthonormality_defect(basis);
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::NotOrthonormal { defect });
        }
    }

    let cross = l1.transpose() * l2;
    let svd = cross.svd(false, false);
    let mut angles: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&g| {
            if g >= 1.0 - COSINE_SNAP {
                return 0.0;
            }
            let theta = g.clamp(0.0, 1.0).acos();
            if theta < ANGLE_SNAP {
                0.0
            } else {
                theta
            }
        })
        .collect();
    // descending singular values give ascending angles; enforce against ties
    angles.sort_by(|a, b| a.partial_cmp(b).expect("angles are finite"));
    Ok(angles)
}

/// Scaled Euclidean sine distance `c · (Σ_ℓ sin²θ_ℓ)^{1/2}` between two
/// subspaces. Symmetric when the subspace dimensions agree and bounded by
/// `c√r`.
pub fn subspace_distance(l1: &DMatrix<f64>, l2: &DMatrix<f64>, scale_c: f64) -> Result<f64> {
    if scale_c <= 0.0 || scale_c.is_nan() {
        return Err(Error::DegenerateScale(alloc::format!(
            "scale constant must be positive, got {scale_c}"
        )));
    }
    let angles = canonical_angles(l1, l2)?;
    let sum: f64 = angles.iter().map(|t| t.sin() * t.sin()).sum();
    Ok(scale_c * sum.sqrt())
}

/// Scale constant `c`: the average over sets of the total retained variance.
///
/// All features must share a common rank; errors if every variance is zero.
pub fn scale_constant(features: &[SetFeatures]) -> Result<f64> {
    let first = features
        .first()
        .ok_or_else(|| Error::EmptyGroup("scale constant needs at least one set".into()))?;
    let rank = first.rank();
    for f in features {
        if f.rank() != rank {
            return Err(Error::DimensionMismatch {
                expected: rank,
                found: f.rank(),
                context: "common subspace rank across sets".into(),
            });
        }
    }
    let c = features.iter().map(SetFeatures::total_variance).sum::<f64>() / features.len() as f64;
    if c <= 0.0 {
        return Err(Error::DegenerateScale(
            "all retained variances are zero".into(),
        ));
    }
    Ok(c)
}

/// Symmetric matrix of pairwise squared subspace distances together with the
/// scale constant that produced it.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceMatrix {
    squared: DMatrix<f64>,
    scale_c: f64,
}

impl DistanceMatrix {
    /// Validates a squared-distance matrix: square, symmetric within `1e-12`
    /// (relative to the largest entry), exactly zero diagonal, finite
    /// nonnegative entries, positive scale.
    pub fn from_squared(squared: DMatrix<f64>, scale_c: f64) -> Result<Self> {
        if squared.nrows() != squared.ncols() {
            return Err(Error::InvalidDistances(alloc::format!(
                "matrix is {}x{}, expected square",
                squared.nrows(),
                squared.ncols()
            )));
        }
        if scale_c <= 0.0 || scale_c.is_nan() {
            return Err(Error::InvalidDistances("scale constant must be positive".into()));
        }
        let magnitude = squared.abs().max().max(1.0);
        for i in 0..squared.nrows() {
            if squared[(i, i)] != 0.0 {
                return Err(Error::InvalidDistances(alloc::format!(
                    "diagonal entry {i} is {}, expected exactly 0",
                    squared[(i, i)]
                )));
            }
            for j in 0..squared.ncols() {
                let v = squared[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistances(alloc::format!(
                        "entry ({i},{j}) is {v}"
                    )));
                }
                if (v - squared[(j, i)]).abs() > 1e-12 * magnitude {
                    return Err(Error::InvalidDistances(alloc::format!(
                        "asymmetry at ({i},{j}): {v} vs {}",
                        squared[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { squared, scale_c })
    }

    /// The `N × N` matrix of squared distances.
    pub fn squared(&self) -> &DMatrix<f64> {
        &self.squared
    }

    /// Entry-wise square root: the plain distances `ρ_s`.
    pub fn distances(&self) -> DMatrix<f64> {
        self.squared.map(|v| v.sqrt())
    }

    /// The scale constant used when measuring the distances.
    pub fn scale(&self) -> f64 {
        self.scale_c
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.squared.nrows()
    }

    /// Always false: distance matrices over zero points are rejected.
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Pairwise squared subspace distances `Δ_ij = ρ_s²(ℒ_i, ℒ_j)` for a common
/// scale constant. All features must share one rank `r`; every entry is at
/// most `c²·r` (up to rounding).
pub fn pairwise_distances(features: &[SetFeatures], scale_c: f64) -> Result<DistanceMatrix> {
    let first = features
        .first()
        .ok_or_else(|| Error::EmptyGroup("pairwise distances need at least one set".into()))?;
    let rank = first.rank();
    let n = features.len();
    let mut squared = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = subspace_distance(features[i].basis(), features[j].basis(), scale_c)?;
            let d2 = d * d;
            squared[(i, j)] = d2;
            squared[(j, i)] = d2;
        }
    }
    let bound = scale_c * scale_c * rank as f64 + 1e-9;
    if let Some(excess) = squared.iter().find(|&&v| v > bound) {
        return Err(Error::InvalidDistances(alloc::format!(
            "entry {excess} exceeds the bound c²·r = {bound}"
        )));
    }
    DistanceMatrix::from_squared(squared, scale_c)
}
