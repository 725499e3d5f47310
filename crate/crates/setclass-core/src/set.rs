//! Core data model: sets of observations and labeled collections.
//!
//! A set `𝒳_i` is stored as a `p × n_i` matrix whose *columns* are the
//! observations, together with an optional 1-based class label. A
//! [`SetCollection`] groups `N` such sets sharing a common dimension `p`;
//! set sizes `n_i` may differ from one another.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::{Error, Result};

/// 1-based class identifier in `{1, ..., K}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "std", serde(try_from = "u32", into = "u32"))]
pub struct ClassLabel(u32);

impl ClassLabel {
    /// Creates a label, rejecting the reserved value 0.
    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidCollection(
                "class labels are 1-based; 0 is not a valid label".into(),
            ));
        }
        Ok(Self(value))
    }

    /// The numeric label value (≥ 1).
    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for ClassLabel {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ClassLabel> for u32 {
    fn from(label: ClassLabel) -> u32 {
        label.0
    }
}

impl core::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One set of observations: a `p × n_i` matrix of column observations, an
/// optional class label and an identifier used in diagnostics and file
/// formats.
///
/// Immutable after construction; construction validates that the set is
/// nonempty and contains no NaN or infinite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    set_id: String,
    observations: DMatrix<f64>,
    label: Option<ClassLabel>,
}

impl ObservationSet {
    /// Builds a validated set from a `p × n_i` matrix of column observations.
    pub fn new(
        set_id: impl Into<String>,
        observations: DMatrix<f64>,
        label: Option<ClassLabel>,
    ) -> Result<Self> {
        let set_id = set_id.into();
        if observations.ncols() == 0 {
            return Err(Error::InvalidSet {
                set_id,
                reason: "a set must contain at least one observation".into(),
            });
        }
        if observations.nrows() == 0 {
            return Err(Error::InvalidSet {
                set_id,
                reason: "observations must have at least one variable".into(),
            });
        }
        for j in 0..observations.ncols() {
            for i in 0..observations.nrows() {
                let v = observations[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidSet {
                        set_id,
                        reason: alloc::format!(
                            "non-finite entry {v} at variable {i}, observation {j}"
                        ),
                    });
                }
            }
        }
        Ok(Self {
            set_id,
            observations,
            label,
        })
    }

    /// Identifier of this set.
    pub fn set_id(&self) -> &str {
        &self.set_id
    }

    /// The `p × n_i` matrix of column observations.
    pub fn observations(&self) -> &DMatrix<f64> {
        &self.observations
    }

    /// Class label, if known.
    pub fn label(&self) -> Option<ClassLabel> {
        self.label
    }

    /// Observation dimension `p`.
    pub fn dim(&self) -> usize {
        self.observations.nrows()
    }

    /// Number of observations `n_i` (always ≥ 1).
    pub fn n_observations(&self) -> usize {
        self.observations.ncols()
    }
}

/// A collection of observation sets sharing a common dimension.
///
/// When labels are present they must form a contiguous range `1..=K` with at
/// least one set per class. Unlabeled sets are allowed (collections used only
/// for prediction); training requires every set to be labeled.
#[derive(Clone, Debug, PartialEq)]
pub struct SetCollection {
    sets: Vec<ObservationSet>,
    class_count: u32,
}

impl SetCollection {
    /// Validates and assembles a collection.
    pub fn new(sets: Vec<ObservationSet>) -> Result<Self> {
        let first = sets
            .first()
            .ok_or_else(|| Error::InvalidCollection("a collection must contain at least one set".into()))?;
        let dim = first.dim();
        for set in &sets {
            if set.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: set.dim(),
                    context: alloc::format!("observation dimension of set `{}`", set.set_id()),
                });
            }
        }

        let mut labels: Vec<u32> = sets.iter().filter_map(|s| s.label()).map(|l| l.get()).collect();
        labels.sort_unstable();
        labels.dedup();
        let class_count = labels.last().copied().unwrap_or(0);
        // contiguity: every class in 1..=K is represented
        if labels.len() as u32 != class_count {
            return Err(Error::InvalidCollection(alloc::format!(
                "labels must cover 1..={class_count} with at least one set per class"
            )));
        }

        Ok(Self { sets, class_count })
    }

    /// The sets, in insertion order.
    pub fn sets(&self) -> &[ObservationSet] {
        &self.sets
    }

    /// Number of sets `N`.
    pub fn n_sets(&self) -> usize {
        self.sets.len()
    }

    /// Common observation dimension `p`.
    pub fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    /// Number of classes `K` represented by the labeled sets (0 if none).
    pub fn class_count(&self) -> u32 {
        self.class_count
    }

    /// True when every set carries a label.
    pub fn is_fully_labeled(&self) -> bool {
        self.sets.iter().all(|s| s.label().is_some())
    }

    /// Smallest set size `min_i n_i`.
    pub fn min_set_size(&self) -> usize {
        self.sets
            .iter()
            .map(|s| s.n_observations())
            .min()
            .expect("collection is nonempty")
    }

    /// Largest subspace rank extractable from every set, `min(p, min_i n_i - 1)`.
    ///
    /// The per-set covariance of `n_i` observations has rank at most
    /// `n_i - 1`, so ranks beyond this bound would include directions of zero
    /// variance.
    pub fn max_usable_rank(&self) -> usize {
        self.dim().min(self.min_set_size().saturating_sub(1))
    }

    /// Largest rank at which subspaces can still differ,
    /// `min(p - 1, min_i n_i - 1)`.
    ///
    /// At rank `p` every estimable subspace is the whole space, so all
    /// pairwise distances vanish and the rank carries no orientation
    /// information; rank scans stop one short of the dimension.
    pub fn max_informative_rank(&self) -> usize {
        self.max_usable_rank().min(self.dim().saturating_sub(1))
    }
}
