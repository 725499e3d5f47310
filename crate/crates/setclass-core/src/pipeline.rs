//! End-to-end training and prediction.
//!
//! Training runs the two-step procedure: (1) extract per-set features (the
//! sample mean and, unless discarded, the rank-`r̂` principal subspace mapped
//! to coordinates `z_i` by classical MDS), where `r̂` is chosen by the rank
//! scan and validated by the permutation test; (2) fit a base discriminant
//! rule on the combined vectors `z*_i = [μ̂_i; z_i]`.
//!
//! Prediction mirrors the two steps for a new set: extract `μ̂†` and (when
//! `r̂ ≥ 1`) its rank-`r̂` subspace, measure squared distances to the stored
//! training subspaces with the frozen scale constant, map out of sample to
//! `z†`, and classify `z*† = [μ̂†; z†]`.
//!
//! The binary convention maps class 1 to `+1` and class 2 to `-1`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::classify::{
    fit_mdeb, fit_ridge_lda, fit_ridge_qda, fit_ya, BaseRule, DEFAULT_GAMMA,
};
use crate::embedding::{cmds_fit, EmbeddingModel, DEFAULT_EIG_TOL};
use crate::features::{extract_features, pairwise_distances, scale_constant, subspace_distance};
use crate::selection::{
    permutation_test, select_dimension, ScalePolicy, SelectionStatistic, DEFAULT_ALPHA,
    DEFAULT_PERMUTATIONS,
};
use crate::set::{ClassLabel, ObservationSet, SetCollection};
use crate::{Error, Result};

/// Base classifier fitted on the combined features.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub enum ClassifierKind {
    /// Ridge linear discriminant analysis.
    RidgeLda,
    /// Ridge quadratic discriminant analysis.
    RidgeQda,
    /// Minimum-distance empirical-Bayes rule.
    Mdeb,
    /// Hard-thresholded covariance rule.
    Ya,
}

/// Knobs for [`train`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    /// Which base rule to fit on the combined features.
    pub classifier: ClassifierKind,
    /// Ridge for the LDA/QDA families.
    pub gamma: f64,
    /// Permutation count `B` for the selection test.
    pub permutations: usize,
    /// Level of the selection test.
    pub alpha: f64,
    /// Separation statistic driving the rank scan.
    pub statistic: SelectionStatistic,
    /// Skip selection and the test, forcing this rank (0 discards the
    /// subspace features).
    pub r_override: Option<usize>,
    /// Cap on the scanned rank; defaults to `min(p, min_i n_i - 1)`.
    pub max_rank: Option<usize>,
    /// Seed for the permutation test.
    pub seed: u64,
    /// Relative eigenvalue cutoff for the embedding.
    pub eig_tol: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            classifier: ClassifierKind::RidgeLda,
            gamma: DEFAULT_GAMMA,
            permutations: DEFAULT_PERMUTATIONS,
            alpha: DEFAULT_ALPHA,
            statistic: SelectionStatistic::SumSquaredT,
            r_override: None,
            max_rank: None,
            seed: 0,
            eig_tol: DEFAULT_EIG_TOL,
        }
    }
}

/// A trained set classifier: frozen embedding state plus the fitted base
/// rule.
///
/// The training subspace bases are retained because prediction must measure
/// distances from a new subspace to every training subspace. When
/// `r_hat == 0` the model carries no embedding and classifies on means alone.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainedSetClassifier {
    embedding: Option<EmbeddingModel>,
    r_hat: usize,
    p_value: Option<f64>,
    scale_c: Option<f64>,
    base_rule: BaseRule,
    feature_layout: (usize, usize),
    training_bases: Vec<DMatrix<f64>>,
}

impl TrainedSetClassifier {
    /// Fitted embedding, absent when the subspace features were discarded.
    pub fn embedding(&self) -> Option<&EmbeddingModel> {
        self.embedding.as_ref()
    }

    /// Selected subspace rank (0 = means only).
    pub fn r_hat(&self) -> usize {
        self.r_hat
    }

    /// Permutation p-value, absent when the rank was overridden.
    pub fn p_value(&self) -> Option<f64> {
        self.p_value
    }

    /// Frozen scale constant used for all prediction-time distances.
    pub fn scale_c(&self) -> Option<f64> {
        self.scale_c
    }

    /// The fitted base rule.
    pub fn base_rule(&self) -> &BaseRule {
        &self.base_rule
    }

    /// `(p, m)` split of the combined feature vector `[μ̂; z]`.
    pub fn feature_layout(&self) -> (usize, usize) {
        self.feature_layout
    }

    /// Stored training subspace bases (empty when `r_hat == 0`).
    pub fn training_bases(&self) -> &[DMatrix<f64>] {
        &self.training_bases
    }
}

fn binary_label(label: ClassLabel) -> i8 {
    if label.get() == 1 {
        1
    } else {
        -1
    }
}

/// Trains a set classifier on a fully labeled two-class collection.
pub fn train(collection: &SetCollection, config: &TrainConfig) -> Result<TrainedSetClassifier> {
    if !collection.is_fully_labeled() {
        return Err(Error::InvalidCollection(
            "training needs every set to be labeled".into(),
        ));
    }
    if collection.class_count() != 2 {
        return Err(Error::InvalidCollection(alloc::format!(
            "training is supported for two classes, found {}",
            collection.class_count()
        )));
    }

    let usable = collection.max_informative_rank();
    let max_rank = match config.max_rank {
        Some(r) if r >= 1 && r <= usable => r,
        Some(r) => {
            return Err(Error::RankOutOfRange {
                requested: r,
                max: usable,
            })
        }
        None => usable,
    };

    let (r_hat, p_value) = match config.r_override {
        Some(r) => {
            if r > max_rank {
                return Err(Error::RankOutOfRange {
                    requested: r,
                    max: max_rank,
                });
            }
            (r, None)
        }
        None => {
            if max_rank == 0 {
                return Err(Error::InvalidCollection(
                    "sets are too small for any subspace rank; override the rank to 0 to \
                     train on means alone"
                        .into(),
                ));
            }
            let scanned = select_dimension(
                collection,
                max_rank,
                ScalePolicy::TotalVariance,
                config.statistic,
            )?;
            let tested = permutation_test(
                collection,
                &scanned,
                config.permutations,
                config.alpha,
                config.seed,
            )?;
            (tested.r_hat, tested.p_value)
        }
    };

    let labels: Vec<i8> = collection
        .sets()
        .iter()
        .map(|s| binary_label(s.label().expect("collection is fully labeled")))
        .collect();
    let p = collection.dim();
    let n = collection.n_sets();

    let (embedding, scale_c, training_bases, features_matrix) = if r_hat >= 1 {
        let features: Vec<_> = collection
            .sets()
            .iter()
            .map(|set| extract_features(set, r_hat))
            .collect::<Result<_>>()?;
        let c = scale_constant(&features)?;
        let delta = pairwise_distances(&features, c)?;
        let model = cmds_fit(&delta, config.eig_tol)?;
        let m = model.dim();

        let mut combined = DMatrix::zeros(p + m, n);
        for (i, set_features) in features.iter().enumerate() {
            combined
                .view_mut((0, i), (p, 1))
                .copy_from(set_features.mean());
            combined
                .view_mut((p, i), (m, 1))
                .copy_from(&model.coordinates().column(i));
        }
        let bases: Vec<DMatrix<f64>> = features.iter().map(|f| f.basis().clone()).collect();
        (Some(model), Some(c), bases, combined)
    } else {
        let mut combined = DMatrix::zeros(p, n);
        for (i, set) in collection.sets().iter().enumerate() {
            let mean = crate::linalg::column_mean(set.observations());
            combined.view_mut((0, i), (p, 1)).copy_from(&mean);
        }
        (None, None, Vec::new(), combined)
    };

    let base_rule = match config.classifier {
        ClassifierKind::RidgeLda => {
            BaseRule::Linear(fit_ridge_lda(&features_matrix, &labels, config.gamma)?)
        }
        ClassifierKind::RidgeQda => {
            BaseRule::Quadratic(fit_ridge_qda(&features_matrix, &labels, config.gamma)?)
        }
        ClassifierKind::Mdeb => BaseRule::Linear(fit_mdeb(&features_matrix, &labels)?),
        ClassifierKind::Ya => BaseRule::Linear(fit_ya(&features_matrix, &labels)?),
    };

    let m = embedding.as_ref().map_or(0, EmbeddingModel::dim);
    Ok(TrainedSetClassifier {
        embedding,
        r_hat,
        p_value,
        scale_c,
        base_rule,
        feature_layout: (p, m),
        training_bases,
    })
}

/// Predicts the class label of a new set.
///
/// When `r_hat ≥ 1` the new set must contain at least `r_hat + 1`
/// observations so its rank-`r_hat` subspace is estimable; smaller sets are
/// rejected rather than silently truncated.
pub fn predict(model: &TrainedSetClassifier, newset: &ObservationSet) -> Result<ClassLabel> {
    let (p, m) = model.feature_layout;
    if newset.dim() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: newset.dim(),
            context: alloc::format!("observation dimension of set `{}`", newset.set_id()),
        });
    }

    let combined = if model.r_hat >= 1 {
        if newset.n_observations() < model.r_hat + 1 {
            return Err(Error::SetTooSmall {
                set_id: newset.set_id().into(),
                n_observations: newset.n_observations(),
                required: model.r_hat + 1,
                rank: model.r_hat,
            });
        }
        let embedding = model
            .embedding
            .as_ref()
            .expect("models with r_hat >= 1 carry an embedding");
        let c = model
            .scale_c
            .expect("models with r_hat >= 1 carry a scale constant");
        let features = extract_features(newset, model.r_hat)?;
        let squared: Vec<f64> = model
            .training_bases
            .iter()
            .map(|basis| subspace_distance(basis, features.basis(), c).map(|d| d * d))
            .collect::<Result<_>>()?;
        let extended = embedding.extend(&squared)?;

        let mut combined = DVector::zeros(p + m);
        combined.view_mut((0, 0), (p, 1)).copy_from(features.mean());
        combined
            .view_mut((p, 0), (m, 1))
            .copy_from(extended.coordinates());
        combined
    } else {
        crate::linalg::column_mean(newset.observations())
    };

    let decision = model.base_rule.classify(&DVectorView::from(&combined));
    ClassLabel::new(if decision == 1 { 1 } else { 2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn labeled(id: &str, p: usize, n: usize, data: &[f64], label: u32) -> ObservationSet {
        ObservationSet::new(
            id,
            DMatrix::from_column_slice(p, n, data),
            Some(ClassLabel::new(label).unwrap()),
        )
        .unwrap()
    }

    /// Deterministic pseudo-random data: class 1 varies along axis 0, class 2
    /// along axis 1, plus small jitter on the remaining axes.
    fn toy_collection(sets_per_class: usize, n_obs: usize) -> SetCollection {
        let p = 4;
        let mut sets = Vec::new();
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut noise = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for k in 1..=2u32 {
            for s in 0..sets_per_class {
                let mut data = Vec::with_capacity(p * n_obs);
                for j in 0..n_obs {
                    let major = if j % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + 0.2 * noise());
                    for axis in 0..p {
                        let main_axis = (k - 1) as usize;
                        let v = if axis == main_axis { major } else { 0.05 * noise() };
                        data.push(v);
                    }
                }
                sets.push(labeled(
                    &alloc::format!("c{k}s{s}"),
                    p,
                    n_obs,
                    &data,
                    k,
                ));
            }
        }
        SetCollection::new(sets).unwrap()
    }

    #[test]
    fn override_skips_selection_and_test() {
        let coll = toy_collection(3, 8);
        let config = TrainConfig {
            r_override: Some(2),
            ..TrainConfig::default()
        };
        let model = train(&coll, &config).unwrap();
        assert_eq!(model.r_hat(), 2);
        assert!(model.p_value().is_none());
        let (p, m) = model.feature_layout();
        assert_eq!(p, 4);
        assert_eq!(m, model.embedding().unwrap().dim());
        assert_eq!(model.training_bases().len(), 6);
        assert!(model.scale_c().unwrap() > 0.0);
    }

    #[test]
    fn override_out_of_range_is_rejected() {
        let coll = toy_collection(3, 8);
        let config = TrainConfig {
            r_override: Some(5), // max usable rank is min(4, 7) = 4
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&coll, &config),
            Err(Error::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn zero_override_trains_on_means_only() {
        let coll = toy_collection(3, 8);
        let config = TrainConfig {
            r_override: Some(0),
            ..TrainConfig::default()
        };
        let model = train(&coll, &config).unwrap();
        assert_eq!(model.r_hat(), 0);
        assert_eq!(model.feature_layout(), (4, 0));
        assert!(model.embedding().is_none());
        assert!(model.training_bases().is_empty());

        // prediction then depends on the mean alone: perturbing the
        // within-set covariance leaves the label unchanged
        let base: Vec<f64> = (0..12).map(|i| (i % 3) as f64 * 0.1 + 1.0).collect();
        let mut spread = base.clone();
        for (i, v) in spread.iter_mut().enumerate() {
            // symmetric perturbation leaves the column mean intact
            *v += if i < 6 { 0.4 } else { -0.4 };
        }
        let a = ObservationSet::new("a", DMatrix::from_column_slice(4, 3, &base), None).unwrap();
        let b = ObservationSet::new("b", DMatrix::from_column_slice(4, 3, &spread), None).unwrap();
        assert_eq!(
            predict(&model, &a).unwrap(),
            predict(&model, &b).unwrap()
        );
    }

    #[test]
    fn training_set_prediction_matches_in_sample_rule() {
        let coll = toy_collection(3, 8);
        let config = TrainConfig {
            r_override: Some(1),
            ..TrainConfig::default()
        };
        let model = train(&coll, &config).unwrap();
        let embedding = model.embedding().unwrap();
        let (p, m) = model.feature_layout();

        for (i, set) in coll.sets().iter().enumerate() {
            // in-sample combined feature vector
            let features = extract_features(set, 1).unwrap();
            let mut z_star = DVector::zeros(p + m);
            z_star.view_mut((0, 0), (p, 1)).copy_from(features.mean());
            z_star
                .view_mut((p, 0), (m, 1))
                .copy_from(&embedding.coordinates().column(i));
            let in_sample = model.base_rule().classify(&DVectorView::from(&z_star));
            let expected = ClassLabel::new(if in_sample == 1 { 1 } else { 2 }).unwrap();

            let relabeled =
                ObservationSet::new("query", set.observations().clone(), None).unwrap();
            assert_eq!(predict(&model, &relabeled).unwrap(), expected, "set {i}");
        }
    }

    #[test]
    fn predict_rejects_undersized_sets() {
        let coll = toy_collection(3, 8);
        let config = TrainConfig {
            r_override: Some(3),
            ..TrainConfig::default()
        };
        let model = train(&coll, &config).unwrap();
        let tiny =
            ObservationSet::new("tiny", DMatrix::from_column_slice(4, 3, &[0.1; 12]), None)
                .unwrap();
        assert!(matches!(
            predict(&model, &tiny),
            Err(Error::SetTooSmall { required: 4, .. })
        ));
    }

    #[test]
    fn predict_rejects_dimension_mismatch() {
        let coll = toy_collection(3, 8);
        let model = train(
            &coll,
            &TrainConfig {
                r_override: Some(1),
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let wrong =
            ObservationSet::new("w", DMatrix::from_column_slice(3, 2, &[0.0; 6]), None).unwrap();
        assert!(matches!(
            predict(&model, &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unlabeled_or_multiclass_collections_are_rejected() {
        let unlabeled = SetCollection::new(vec![
            ObservationSet::new("a", DMatrix::from_column_slice(2, 2, &[0.0; 4]), None).unwrap(),
        ])
        .unwrap();
        assert!(train(&unlabeled, &TrainConfig::default()).is_err());

        let three = SetCollection::new(vec![
            labeled("a", 2, 2, &[0.0, 0.1, 0.2, 0.3], 1),
            labeled("b", 2, 2, &[1.0, 1.1, 1.2, 1.3], 2),
            labeled("c", 2, 2, &[2.0, 2.1, 2.2, 2.3], 3),
        ])
        .unwrap();
        assert!(train(&three, &TrainConfig::default()).is_err());
    }
}
