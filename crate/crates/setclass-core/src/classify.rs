//! Discriminant rules on feature vectors and set-level voting wrappers.
//!
//! All rules are binary with labels `±1` and share the sign convention
//! `sign(0) = +1`. The linear family scores a query as
//!
//! ```text
//! score(x) = (x - (μ̂₊ + μ̂₋)/2)ᵀ M⁻¹ (μ̂₊ - μ̂₋)
//! ```
//!
//! with `M` one of: the pooled covariance plus a ridge `γI` (ridge LDA), the
//! pooled covariance plus `tr(S)/min(n,p) · I` (the minimum-distance
//! empirical-Bayes rule, MDEB), or a hard-thresholded eigenvalue-floored
//! covariance estimate (the YA rule). Quadratic discriminant analysis uses
//! per-class covariances with the same ridge.
//!
//! The pooled covariance uses the `1/n` denominator with per-class means,
//! matching the convention used elsewhere in the crate.
//!
//! Voting wrappers classify a whole set by combining per-observation scores:
//! majority voting sums the signs, weighted voting sums the scores.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, DVectorView};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::sorted_symmetric_eigen;
use crate::set::ObservationSet;
use crate::{Error, Result};

/// Ridge used by default wherever a shrinkage covariance is needed.
pub const DEFAULT_GAMMA: f64 = 0.01;

/// Sign with the fixed boundary convention `sign(0) = +1`.
#[inline]
pub fn sign_pm(value: f64) -> i8 {
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

/// Which covariance stabilization produced a linear rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub enum RuleKind {
    /// Pooled covariance plus a fixed ridge.
    RidgeLda,
    /// Ridge chosen as `tr(S)/min(n,p)`.
    Mdeb,
    /// Hard-thresholded eigenvalue-floored covariance.
    Ya,
}

/// A fitted binary linear discriminant: `classify(x) = sign(wᵀx + b)`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearRule {
    weight: DVector<f64>,
    offset: f64,
    kind: RuleKind,
}

impl LinearRule {
    /// Discriminant score of a query; positive means class `+1`.
    pub fn score(&self, x: &DVectorView<'_, f64>) -> f64 {
        self.weight.dot(x) + self.offset
    }

    /// Predicted label in `{+1, -1}` with `sign(0) = +1`.
    pub fn classify(&self, x: &DVectorView<'_, f64>) -> i8 {
        sign_pm(self.score(x))
    }

    /// Weight vector `w`.
    pub fn weight(&self) -> &DVector<f64> {
        &self.weight
    }

    /// Offset `b`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Which stabilization fitted this rule.
    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    /// Feature dimension the rule expects.
    pub fn dim(&self) -> usize {
        self.weight.len()
    }
}

/// A fitted binary quadratic discriminant with per-class regularized
/// Gaussians; index 0 holds class `+1`, index 1 class `-1`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadraticRule {
    means: [DVector<f64>; 2],
    precisions: [DMatrix<f64>; 2],
    log_dets: [f64; 2],
    priors: [f64; 2],
}

impl QuadraticRule {
    /// Log-density difference `δ₊(x) - δ₋(x)`; positive means class `+1`.
    pub fn score(&self, x: &DVectorView<'_, f64>) -> f64 {
        let d = |k: usize| {
            let dev = x - &self.means[k];
            -0.5 * (&self.precisions[k] * &dev).dot(&dev) - 0.5 * self.log_dets[k]
                + self.priors[k].ln()
        };
        d(0) - d(1)
    }

    /// Predicted label in `{+1, -1}` with `sign(0) = +1`.
    pub fn classify(&self, x: &DVectorView<'_, f64>) -> i8 {
        sign_pm(self.score(x))
    }

    /// Feature dimension the rule expects.
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }
}

/// Either family of fitted base rule.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub enum BaseRule {
    /// A linear discriminant.
    Linear(LinearRule),
    /// A quadratic discriminant.
    Quadratic(QuadraticRule),
}

impl BaseRule {
    /// Discriminant score of a query; positive means class `+1`.
    pub fn score(&self, x: &DVectorView<'_, f64>) -> f64 {
        match self {
            BaseRule::Linear(rule) => rule.score(x),
            BaseRule::Quadratic(rule) => rule.score(x),
        }
    }

    /// Predicted label in `{+1, -1}`.
    pub fn classify(&self, x: &DVectorView<'_, f64>) -> i8 {
        sign_pm(self.score(x))
    }

    /// Feature dimension the rule expects.
    pub fn dim(&self) -> usize {
        match self {
            BaseRule::Linear(rule) => rule.dim(),
            BaseRule::Quadratic(rule) => rule.dim(),
        }
    }
}

/// Validated class means and pooled scatter of a labeled sample.
struct TwoClassStats {
    mean_pos: DVector<f64>,
    mean_neg: DVector<f64>,
    pooled: DMatrix<f64>,
    n: usize,
}

fn two_class_stats(x: &DMatrix<f64>, y: &[i8]) -> Result<TwoClassStats> {
    let n = x.ncols();
    let d = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
            context: "labels vs observation columns".into(),
        });
    }
    if let Some(bad) = y.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidConfig(alloc::format!(
            "labels must be +1 or -1, got {bad}"
        )));
    }
    let n_pos = y.iter().filter(|&&l| l == 1).count();
    if n_pos == 0 || n_pos == n {
        return Err(Error::SingleClass);
    }

    let mut mean_pos = DVector::zeros(d);
    let mut mean_neg = DVector::zeros(d);
    for (j, &label) in y.iter().enumerate() {
        if label == 1 {
            mean_pos += x.column(j);
        } else {
            mean_neg += x.column(j);
        }
    }
    mean_pos /= n_pos as f64;
    mean_neg /= (n - n_pos) as f64;

    let mut centered = x.clone();
    for (j, &label) in y.iter().enumerate() {
        let mean = if label == 1 { &mean_pos } else { &mean_neg };
        centered.column_mut(j).axpy(-1.0, mean, 1.0);
    }
    let pooled = (&centered * centered.transpose()) / n as f64;
    Ok(TwoClassStats {
        mean_pos,
        mean_neg,
        pooled,
        n,
    })
}

fn linear_rule_from(
    stats: &TwoClassStats,
    regularized: DMatrix<f64>,
    kind: RuleKind,
) -> Result<LinearRule> {
    let chol = regularized
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("regularized pooled covariance".into()))?;
    let weight = chol.solve(&(&stats.mean_pos - &stats.mean_neg));
    let midpoint = (&stats.mean_pos + &stats.mean_neg) / 2.0;
    let offset = -midpoint.dot(&weight);
    Ok(LinearRule {
        weight,
        offset,
        kind,
    })
}

/// Fits ridge LDA on `d × n` feature columns with `±1` labels: the pooled
/// covariance is shrunk to `S + γI` before inversion.
pub fn fit_ridge_lda(x: &DMatrix<f64>, y: &[i8], gamma: f64) -> Result<LinearRule> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "ridge must be a nonnegative real, got {gamma}"
        )));
    }
    let stats = two_class_stats(x, y)?;
    let mut regularized = stats.pooled.clone();
    for k in 0..regularized.nrows() {
        regularized[(k, k)] += gamma;
    }
    linear_rule_from(&stats, regularized, RuleKind::RidgeLda)
}

/// Fits the minimum-distance empirical-Bayes rule: ridge LDA with the
/// data-driven ridge `γ = tr(S)/min(n, p)`, which is positive whenever the
/// data carry any variance, so the rule exists even when `p ≫ n`.
pub fn fit_mdeb(x: &DMatrix<f64>, y: &[i8]) -> Result<LinearRule> {
    let stats = two_class_stats(x, y)?;
    let gamma = stats.pooled.trace() / stats.n.min(x.nrows()) as f64;
    let mut regularized = stats.pooled.clone();
    for k in 0..regularized.nrows() {
        regularized[(k, k)] += gamma;
    }
    linear_rule_from(&stats, regularized, RuleKind::Mdeb)
}

/// Hard-thresholded covariance estimate backing the YA rule.
///
/// With `S = Σ_j λ_j e_j e_jᵀ` (eigenvalues descending) and the data-driven
/// floor `ω = min{tr(S)/(p^{1/2} n^{1/4}), tr(S)/min(n, p)}`, the leading
/// `n - 1` eigenvalues are replaced by
///
/// ```text
/// max{ λ_j,  ω · λ_j / (λ_j - (Σ_{i=j+1}^{n-1} λ_i) / (n - j)) }
/// ```
///
/// and the trailing `p - n + 1` eigenvalues are set to `ω`. Every modified
/// eigenvalue is at least `ω > 0`, so the estimate is always invertible.
pub fn ya_thresholded_covariance(s: &DMatrix<f64>, n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::InvalidConfig(
            "the thresholded covariance needs at least two observations".into(),
        ));
    }
    let p = s.nrows();
    let trace = s.trace();
    if trace <= 0.0 || trace.is_nan() {
        return Err(Error::DegenerateScale(
            "covariance trace must be positive".into(),
        ));
    }
    let nf = n as f64;
    let omega = (trace / ((p as f64).sqrt() * nf.powf(0.25))).min(trace / n.min(p) as f64);

    let (values, vectors) = sorted_symmetric_eigen(s.clone())?;
    let top = values[0].max(0.0);
    let mut modified = alloc::vec![0.0; p];
    for j in 1..=p {
        // 1-based index to match the formula
        let lambda = values[j - 1];
        modified[j - 1] = if j >= n || lambda <= 1e-12 * top.max(1e-300) {
            omega
        } else {
            let tail: f64 = values[j..(n - 1).min(p)].iter().sum();
            let denom = lambda - tail / (nf - j as f64);
            if denom <= 0.0 {
                // only reachable through rounding on exact eigenvalue ties
                lambda.max(omega)
            } else {
                lambda.max(omega * lambda / denom)
            }
        };
    }

    let mut scaled = vectors.clone();
    for (k, &v) in modified.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v);
    }
    Ok(scaled * vectors.transpose())
}

/// Fits the YA rule: a linear discriminant through the hard-thresholded
/// covariance estimate of [`ya_thresholded_covariance`].
pub fn fit_ya(x: &DMatrix<f64>, y: &[i8]) -> Result<LinearRule> {
    let stats = two_class_stats(x, y)?;
    let thresholded = ya_thresholded_covariance(&stats.pooled, stats.n)?;
    linear_rule_from(&stats, thresholded, RuleKind::Ya)
}

/// Fits ridge QDA: per-class covariances shrunk to `Σ̂_k + γI`, discriminant
/// by per-class Gaussian log-density with equal priors.
pub fn fit_ridge_qda(x: &DMatrix<f64>, y: &[i8], gamma: f64) -> Result<QuadraticRule> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "ridge must be a nonnegative real, got {gamma}"
        )));
    }
    let stats = two_class_stats(x, y)?;
    let d = x.nrows();

    let means = [stats.mean_pos.clone(), stats.mean_neg.clone()];
    let mut precisions = [DMatrix::zeros(d, d), DMatrix::zeros(d, d)];
    let mut log_dets = [0.0; 2];
    for (k, target) in [1i8, -1i8].iter().enumerate() {
        let cols: Vec<usize> = y
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == *target)
            .map(|(j, _)| j)
            .collect();
        let mut cov = DMatrix::zeros(d, d);
        for &j in &cols {
            let dev = x.column(j) - &means[k];
            cov += &dev * dev.transpose();
        }
        cov /= cols.len() as f64;
        for i in 0..d {
            cov[(i, i)] += gamma;
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::SingularMatrix("per-class regularized covariance".into()))?;
        log_dets[k] = chol.ln_determinant();
        precisions[k] = chol.inverse();
    }

    Ok(QuadraticRule {
        means,
        precisions,
        log_dets,
        priors: [0.5, 0.5],
    })
}

/// How per-observation predictions are combined over a set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub enum VoteMode {
    /// Sign of the sum of per-observation predicted signs.
    Majority,
    /// Sign of the sum of per-observation scores.
    Weighted,
}

/// Classifies a whole set by voting the per-observation outputs of a rule
/// fitted on pooled observations.
pub fn vote_classify(rule: &BaseRule, set: &ObservationSet, mode: VoteMode) -> Result<i8> {
    if rule.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: rule.dim(),
            found: set.dim(),
            context: alloc::format!("observation dimension of set `{}`", set.set_id()),
        });
    }
    let obs = set.observations();
    let mut tally = 0.0;
    for j in 0..obs.ncols() {
        let column = obs.column(j);
        let x = DVectorView::from(&column);
        tally += match mode {
            VoteMode::Majority => sign_pm(rule.score(&x)) as f64,
            VoteMode::Weighted => rule.score(&x),
        };
    }
    Ok(sign_pm(tally))
}
