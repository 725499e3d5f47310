//! Set classification from per-set statistical features.
//!
//! A *set classification* problem assigns one label to an entire set of
//! observations: the training data are `N` labeled sets `𝒳_i` (each a `p × n_i`
//! matrix of column observations) and prediction is performed on a new set.
//! This crate implements a feature-extraction pipeline for that problem:
//!
//! 1. every set is summarized by its sample mean and the subspace spanned by
//!    its leading principal components ([`features`]);
//! 2. subspaces are compared through canonical angles with a scaled Euclidean
//!    sine metric, and the resulting distance matrix is embedded into a real
//!    vector space by classical multidimensional scaling, with a closed-form
//!    out-of-sample map for new sets ([`embedding`]);
//! 3. the subspace dimension is chosen by maximizing a diagonal Hotelling
//!    statistic over candidate ranks and validated by a permutation test
//!    ([`selection`]);
//! 4. an off-the-shelf discriminant rule is trained on the combined feature
//!    vectors `[mean; embedded subspace]` ([`classify`], [`pipeline`]).
//!
//! A simulation harness with four hierarchical benchmark generators lives in
//! [`simulate`].
//!
//! The crate is `no_std`-compatible (requires `alloc`); file formats, model
//! persistence and the command-line interface live in the companion `setclass`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

/// Re-export of the linear-algebra crate whose matrix types appear in this
/// crate's public API.
pub use nalgebra;

pub mod classify;
pub mod embedding;
mod error;
pub mod features;
mod linalg;
pub mod pipeline;
pub mod selection;
pub mod set;
pub mod simulate;

pub use error::{Error, Result};
