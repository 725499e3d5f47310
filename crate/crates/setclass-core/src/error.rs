use alloc::string::String;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors produced by validation and numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A single set of observations failed validation.
    #[error("set `{set_id}`: {reason}")]
    InvalidSet {
        /// Identifier of the offending set.
        set_id: String,
        /// What went wrong.
        reason: String,
    },

    /// A collection of sets failed validation.
    #[error("invalid collection: {0}")]
    InvalidCollection(String),

    /// A requested subspace rank is outside the usable range.
    #[error("rank {requested} out of range, expected 1..={max}")]
    RankOutOfRange {
        /// The rank that was asked for.
        requested: usize,
        /// Largest usable rank for the given data.
        max: usize,
    },

    /// Matrix dimensions do not line up.
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        /// Expected extent.
        expected: usize,
        /// Actual extent.
        found: usize,
        /// Which quantity disagreed.
        context: String,
    },

    /// The iterative eigen/singular-value solver did not converge.
    #[error("eigensolver failed to converge on a {size}x{size} matrix")]
    EigenFailed {
        /// Side length of the decomposed matrix.
        size: usize,
    },

    /// A matrix expected to have orthonormal columns does not.
    #[error("basis is not orthonormal (max deviation {defect:e})")]
    NotOrthonormal {
        /// Largest entry of `|LᵀL - I|`.
        defect: f64,
    },

    /// All variances vanished, so no meaningful scale exists.
    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    /// A squared-distance matrix violated its invariants.
    #[error("invalid distance matrix: {0}")]
    InvalidDistances(String),

    /// The doubly centered distance matrix has no positive eigenvalue.
    #[error("degenerate embedding: no positive eigenvalue")]
    DegenerateEmbedding,

    /// A group required to be nonempty was empty.
    #[error("empty group: {0}")]
    EmptyGroup(String),

    /// Every coordinate variance fell below the usable floor.
    #[error("all coordinate variances are degenerate")]
    DegenerateVariance,

    /// A matrix that must be inverted is (numerically) singular.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// Training data did not contain both classes.
    #[error("training data must contain both classes")]
    SingleClass,

    /// A new set is too small for the trained subspace dimension.
    #[error("set `{set_id}` has {n_observations} observations, need at least {required} for rank {rank}")]
    SetTooSmall {
        /// Identifier of the offending set.
        set_id: String,
        /// Observations available.
        n_observations: usize,
        /// Observations required.
        required: usize,
        /// Trained subspace rank.
        rank: usize,
    },

    /// A configuration value is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A matrix required to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite {
        /// Most negative eigenvalue encountered.
        min_eigenvalue: f64,
    },
}
