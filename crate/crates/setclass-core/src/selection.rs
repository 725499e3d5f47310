//! Data-driven choice of the subspace dimension.
//!
//! For every candidate rank `r` the training sets are embedded (features →
//! distances → classical MDS) and a two-sample separation statistic is
//! evaluated on the embedded coordinates. The default statistic is the
//! diagonal Hotelling form
//!
//! ```text
//! T(r) = ηᵀ D⁻¹ η,
//! ```
//!
//! the sum of squared marginal t-statistics, where `η` is the difference of
//! group means and `D` the diagonal of the pooled covariance (CMDS axes are
//! uncorrelated by construction, so off-diagonal covariances are noise). The
//! selected rank `r̂` maximizes the statistic, with ties broken toward the
//! smallest rank.
//!
//! A permutation test decides whether the selected subspace features carry
//! any class information at all: class labels are permuted over sets, the
//! statistic maximum `T_b = max_r T(r, b)` is recomputed for each permuted
//! labeling, and the p-value is the fraction of permutations with
//! `T(r̂) ≤ T_b`. When the p-value is not below the level `α` the rank is
//! updated to `r̂ = 0`, discarding the subspace features. When the group
//! sizes admit no more distinct relabelings than the requested number of
//! permutations, the test enumerates every relabeling exactly once and the
//! p-value is exact.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{cmds_fit, DEFAULT_EIG_TOL};
use crate::features::{extract_features, pairwise_distances, scale_constant, SetFeatures};
use crate::set::{ClassLabel, SetCollection};
use crate::{Error, Result};

/// Coordinate variances below this floor are excluded from diagonal
/// statistics; CMDS axes with essentially zero variance are numerical
/// artifacts and inverting them would amplify noise.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Default permutation count for the selection test.
pub const DEFAULT_PERMUTATIONS: usize = 1000;
/// Default level of the selection test.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Two-sample separation statistic evaluated on embedded coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum SelectionStatistic {
    /// Sum of squared marginal t-statistics `ηᵀD⁻¹η` (diagonal Hotelling).
    #[default]
    SumSquaredT,
    /// Ridged diagonal variant `ηᵀ(D + τI)⁻¹η`, `τ ≥ 0`.
    RidgedDiagonal {
        /// Ridge added to each coordinate variance.
        tau: f64,
    },
    /// Ridged full-covariance Hotelling `ηᵀ(S + τI)⁻¹η`, `τ ≥ 0`.
    RidgedPooled {
        /// Ridge added to the pooled covariance.
        tau: f64,
    },
    /// Dempster's statistic `ηᵀη / tr(S)`.
    Dempster,
    /// Ratio of summed within-group to summed between-group subspace
    /// distances, computed from the raw distances rather than the embedding.
    /// (Despite the orientation suggested by the name "ratio of between and
    /// within", the conventional formula sums within-group pairs in the
    /// numerator; it is implemented as printed.)
    DistanceRatio,
}

/// How the scale constant `c` is chosen during the rank scan.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ScalePolicy {
    /// Average total retained variance across sets (the default).
    #[default]
    TotalVariance,
    /// A fixed externally supplied constant.
    Fixed(f64),
}

/// Outcome of rank selection, before or after the permutation test.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    /// Selected rank; 0 means the subspace features were discarded.
    pub r_hat: usize,
    /// Statistic value for every scanned rank `1..=R`.
    pub statistic_by_r: BTreeMap<usize, f64>,
    /// Permutation p-value, once the test has run.
    pub p_value: Option<f64>,
    /// Number of permutations actually used (0 before the test; the size of
    /// the full relabeling group when the test enumerated exhaustively).
    pub permutations: usize,
    /// Statistic the scan was performed with.
    pub statistic: SelectionStatistic,
    /// Scale policy the scan was performed with.
    pub scale: ScalePolicy,
}

/// Diagonal Hotelling statistic `ηᵀD⁻¹η` on `m × N` coordinates under a
/// binary partition (`true` marks group 1).
///
/// Coordinates whose pooled variance falls below [`VARIANCE_FLOOR`] are
/// excluded from the sum; if every coordinate is excluded the statistic is
/// undefined and an error is returned. Both groups must be nonempty.
pub fn hotelling_t(coords: &DMatrix<f64>, in_group1: &[bool]) -> Result<f64> {
    let (eta, diag) = group_stats(coords, in_group1)?;
    let mut t = 0.0;
    let mut used = 0;
    for (j, &d) in diag.iter().enumerate() {
        if d >= VARIANCE_FLOOR {
            t += eta[j] * eta[j] / d;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(t)
}

/// Evaluates any [`SelectionStatistic`] on embedded coordinates.
///
/// `distances` supplies the raw pairwise subspace distances `ρ_s` and is only
/// consulted by [`SelectionStatistic::DistanceRatio`]; other statistics use
/// the coordinates alone.
pub fn alt_statistic(
    coords: &DMatrix<f64>,
    distances: Option<&DMatrix<f64>>,
    in_group1: &[bool],
    kind: SelectionStatistic,
) -> Result<f64> {
    match kind {
        SelectionStatistic::SumSquaredT => hotelling_t(coords, in_group1),
        SelectionStatistic::RidgedDiagonal { tau } => {
            check_tau(tau)?;
            let (eta, diag) = group_stats(coords, in_group1)?;
            let mut t = 0.0;
            let mut used = 0;
            for (j, &d) in diag.iter().enumerate() {
                let denom = d + tau;
                if denom >= VARIANCE_FLOOR {
                    t += eta[j] * eta[j] / denom;
                    used += 1;
                }
            }
            if used == 0 {
                return Err(Error::DegenerateVariance);
            }
            Ok(t)
        }
        SelectionStatistic::RidgedPooled { tau } => {
            check_tau(tau)?;
            let (eta, _) = group_stats(coords, in_group1)?;
            let mut pooled = pooled_covariance(coords, in_group1)?;
            for k in 0..pooled.nrows() {
                pooled[(k, k)] += tau;
            }
            let chol = pooled.cholesky().ok_or_else(|| {
                Error::SingularMatrix("pooled coordinate covariance plus ridge".into())
            })?;
            let solved = chol.solve(&eta);
            Ok(eta.dot(&solved))
        }
        SelectionStatistic::Dempster => {
            let (eta, diag) = group_stats(coords, in_group1)?;
            let trace: f64 = diag.iter().sum();
            if trace < VARIANCE_FLOOR {
                return Err(Error::DegenerateVariance);
            }
            Ok(eta.norm_squared() / trace)
        }
        SelectionStatistic::DistanceRatio => {
            let distances = distances.ok_or_else(|| {
                Error::InvalidConfig(
                    "the distance-ratio statistic needs the raw distance matrix".into(),
                )
            })?;
            distance_ratio(distances, in_group1)
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "ridge parameter must be a nonnegative real, got {tau}"
        )));
    }
    Ok(())
}

/// Group-mean difference and diagonal of the pooled covariance (1/N form).
fn group_stats(coords: &DMatrix<f64>, in_group1: &[bool]) -> Result<(DVector<f64>, Vec<f64>)> {
    let n = coords.ncols();
    let m = coords.nrows();
    if in_group1.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: in_group1.len(),
            context: "partition length vs number of coordinate columns".into(),
        });
    }
    if m == 0 {
        return Err(Error::DegenerateVariance);
    }
    let n1 = in_group1.iter().filter(|&&g| g).count();
    let n2 = n - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::EmptyGroup("both groups must be nonempty".into()));
    }

    let mut mean1 = DVector::zeros(m);
    let mut mean2 = DVector::zeros(m);
    for (i, &g) in in_group1.iter().enumerate() {
        if g {
            mean1 += coords.column(i);
        } else {
            mean2 += coords.column(i);
        }
    }
    mean1 /= n1 as f64;
    mean2 /= n2 as f64;

    let mut diag = alloc::vec![0.0; m];
    for (i, &g) in in_group1.iter().enumerate() {
        let center = if g { &mean1 } else { &mean2 };
        for j in 0..m {
            let dev = coords[(j, i)] - center[j];
            diag[j] += dev * dev;
        }
    }
    for d in &mut diag {
        *d /= n as f64;
    }
    Ok((mean1 - mean2, diag))
}

/// Pooled covariance of the coordinates with the 1/N denominator.
fn pooled_covariance(coords: &DMatrix<f64>, in_group1: &[bool]) -> Result<DMatrix<f64>> {
    let n = coords.ncols();
    let m = coords.nrows();
    let n1 = in_group1.iter().filter(|&&g| g).count();
    if n1 == 0 || n1 == n {
        return Err(Error::EmptyGroup("both groups must be nonempty".into()));
    }
    let mut mean1 = DVector::zeros(m);
    let mut mean2 = DVector::zeros(m);
    for (i, &g) in in_group1.iter().enumerate() {
        if g {
            mean1 += coords.column(i);
        } else {
            mean2 += coords.column(i);
        }
    }
    mean1 /= n1 as f64;
    mean2 /= (n - n1) as f64;

    let mut pooled = DMatrix::zeros(m, m);
    for (i, &g) in in_group1.iter().enumerate() {
        let center = if g { &mean1 } else { &mean2 };
        let dev = coords.column(i) - center;
        pooled += &dev * dev.transpose();
    }
    pooled /= n as f64;
    Ok(pooled)
}

/// Within-group over between-group summed distances from the raw `ρ_s`
/// matrix.
fn distance_ratio(distances: &DMatrix<f64>, in_group1: &[bool]) -> Result<f64> {
    let n = distances.nrows();
    if in_group1.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: in_group1.len(),
            context: "partition length vs distance matrix size".into(),
        });
    }
    let mut within = 0.0;
    let mut between = 0.0;
    for i in 0..n {
        for j in 0..n {
            if in_group1[i] == in_group1[j] {
                within += distances[(i, j)];
            } else if in_group1[i] {
                between += distances[(i, j)];
            }
        }
    }
    if between <= 0.0 {
        return Err(Error::DegenerateScale(
            "between-group distances sum to zero".into(),
        ));
    }
    Ok(within / between)
}

/// Embedded coordinates and raw distances for one scanned rank.
struct RankScan {
    coords: DMatrix<f64>,
    distances: DMatrix<f64>,
}

/// Embeds the collection at every rank `1..=max_rank`.
fn scan_ranks(
    collection: &SetCollection,
    max_rank: usize,
    scale: ScalePolicy,
) -> Result<Vec<RankScan>> {
    let usable = collection.max_informative_rank();
    if max_rank == 0 || max_rank > usable {
        return Err(Error::RankOutOfRange {
            requested: max_rank,
            max: usable,
        });
    }
    let full: Vec<SetFeatures> = collection
        .sets()
        .iter()
        .map(|set| extract_features(set, max_rank))
        .collect::<Result<_>>()?;

    let mut scans = Vec::with_capacity(max_rank);
    for r in 1..=max_rank {
        let truncated: Vec<SetFeatures> = full
            .iter()
            .map(|f| f.truncate(r))
            .collect::<Result<_>>()?;
        let c = match scale {
            ScalePolicy::TotalVariance => scale_constant(&truncated)?,
            ScalePolicy::Fixed(c) if c > 0.0 => c,
            ScalePolicy::Fixed(c) => {
                return Err(Error::InvalidConfig(alloc::format!(
                    "fixed scale constant must be positive, got {c}"
                )))
            }
        };
        let delta = pairwise_distances(&truncated, c)?;
        let model = cmds_fit(&delta, DEFAULT_EIG_TOL)?;
        scans.push(RankScan {
            coords: model.coordinates().clone(),
            distances: delta.distances(),
        });
    }
    Ok(scans)
}

/// Binary partition of a fully labeled two-class collection; `true` marks
/// class 1.
fn binary_partition(collection: &SetCollection) -> Result<Vec<bool>> {
    if !collection.is_fully_labeled() {
        return Err(Error::InvalidCollection(
            "rank selection needs every set to be labeled".into(),
        ));
    }
    if collection.class_count() != 2 {
        return Err(Error::InvalidCollection(alloc::format!(
            "rank selection is defined for two classes, found {}",
            collection.class_count()
        )));
    }
    let one = ClassLabel::new(1).expect("1 is a valid label");
    Ok(collection
        .sets()
        .iter()
        .map(|s| s.label() == Some(one))
        .collect())
}

/// Scans ranks `1..=max_rank` and selects the one maximizing the statistic.
///
/// Deterministic given the data: no randomness enters the statistic path.
/// Ties at the maximum resolve to the smallest rank. The returned result has
/// no p-value; follow with [`permutation_test`] to validate the selection.
pub fn select_dimension(
    collection: &SetCollection,
    max_rank: usize,
    scale: ScalePolicy,
    statistic: SelectionStatistic,
) -> Result<SelectionResult> {
    let in_group1 = binary_partition(collection)?;
    let scans = scan_ranks(collection, max_rank, scale)?;

    let mut statistic_by_r = BTreeMap::new();
    let mut best: Option<(usize, f64)> = None;
    for (idx, scan) in scans.iter().enumerate() {
        let r = idx + 1;
        let value = alt_statistic(&scan.coords, Some(&scan.distances), &in_group1, statistic)?;
        statistic_by_r.insert(r, value);
        let improves = match best {
            None => true,
            Some((_, best_value)) => value > best_value,
        };
        if improves {
            best = Some((r, value));
        }
    }
    let (r_hat, _) = best.expect("max_rank >= 1 guarantees at least one candidate");

    Ok(SelectionResult {
        r_hat,
        statistic_by_r,
        p_value: None,
        permutations: 0,
        statistic,
        scale,
    })
}

/// Permutation test for the usefulness of the selected subspace features.
///
/// Labels are permuted over sets (group sizes preserved), `T_b = max_r T(r,b)`
/// is recomputed for each permuted labeling and the p-value is
/// `B⁻¹ Σ_b 1{T(r̂) ≤ T_b}`. When `p ≥ alpha`, `r_hat` is updated to 0.
///
/// If the number of distinct relabelings `C(N, N₁)` does not exceed
/// `permutations`, every relabeling is enumerated exactly once instead of
/// sampling, making the p-value exact and independent of the seed. Otherwise
/// each of the `permutations` replicates draws its labels from an RNG stream
/// derived from `(seed, b)`, so the result is deterministic for a given seed
/// regardless of evaluation order.
pub fn permutation_test(
    collection: &SetCollection,
    selection: &SelectionResult,
    permutations: usize,
    alpha: f64,
    seed: u64,
) -> Result<SelectionResult> {
    if permutations == 0 {
        return Err(Error::InvalidConfig("need at least one permutation".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "test level must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    let observed = selection
        .statistic_by_r
        .get(&selection.r_hat)
        .copied()
        .ok_or_else(|| {
            Error::InvalidConfig(alloc::format!(
                "selection has no statistic recorded for r̂ = {}",
                selection.r_hat
            ))
        })?;
    let max_rank = *selection
        .statistic_by_r
        .keys()
        .max()
        .expect("selection scanned at least one rank");

    let in_group1 = binary_partition(collection)?;
    let scans = scan_ranks(collection, max_rank, selection.scale)?;
    let n = in_group1.len();
    let n1 = in_group1.iter().filter(|&&g| g).count();

    let max_statistic = |labels: &[bool]| -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for scan in &scans {
            let value = alt_statistic(
                &scan.coords,
                Some(&scan.distances),
                labels,
                selection.statistic,
            )?;
            if value > best {
                best = value;
            }
        }
        Ok(best)
    };

    let mut exceed = 0usize;
    let used;
    if let Some(total) = distinct_relabelings(n, n1).filter(|&t| t <= permutations) {
        // exhaustive: every assignment of n1 group-1 slots, observed included
        used = total;
        let mut labels = alloc::vec![false; n];
        for subset in Combinations::new(n, n1) {
            labels.iter_mut().for_each(|l| *l = false);
            for &i in &subset {
                labels[i] = true;
            }
            if observed <= max_statistic(&labels)? {
                exceed += 1;
            }
        }
    } else {
        used = permutations;
        let mut labels = in_group1.clone();
        for b in 0..permutations {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            labels.copy_from_slice(&in_group1);
            labels.shuffle(&mut rng);
            if observed <= max_statistic(&labels)? {
                exceed += 1;
            }
        }
    }

    let p_value = exceed as f64 / used as f64;
    Ok(SelectionResult {
        r_hat: if p_value < alpha { selection.r_hat } else { 0 },
        statistic_by_r: selection.statistic_by_r.clone(),
        p_value: Some(p_value),
        permutations: used,
        statistic: selection.statistic,
        scale: selection.scale,
    })
}

/// `C(n, k)` if it fits in a usize, else `None`.
fn distinct_relabelings(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Lexicographic k-subsets of `{0, ..., n-1}`.
struct Combinations {
    n: usize,
    indices: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            indices: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.indices.clone();
        let k = self.indices.len();
        // advance to the next subset
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.indices[i] != i + self.n - k {
                self.indices[i] += 1;
                for j in (i + 1)..k {
                    self.indices[j] = self.indices[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}
