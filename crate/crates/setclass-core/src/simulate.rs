//! Benchmark data generators and the misclassification harness.
//!
//! Data follow a two-class hierarchical model: each set draws its own
//! parameters `(μ_i, Σ_i)` from a class-conditional law, then fills the set
//! with i.i.d. Gaussian observations `x_ij ~ N_p(μ_i, Σ_i)`. Set means are
//! `μ_i | (Y=k) ~ N_p(δ_(k), 10⁻² I)` with `δ_(1) = δ·e₁` and `δ_(2) = 0`;
//! the covariance law distinguishes four models:
//!
//! 1. no covariance difference: `Σ_i = Ω_p(ρ)` for every set;
//! 2. Wishart scatter around a spiked target: `Σ_i ~ df⁻¹ W_p(V_k, df)`,
//!    `V_k = Ω_p(ρ) + σ² e_k e_kᵀ` and `df = max(m, p)` (the classical
//!    Wishart needs at least `p` degrees of freedom; `E[Σ_i] = V_k` either
//!    way);
//! 3. inverse-Wishart scatter: `Σ_i ~ p · IW_p(V_k, p)`;
//! 4. random spike direction: `Σ_i = Ω_p(ρ) + σ² u_i u_iᵀ` with
//!    `u_i ~ vMF(e_k, κ)`.
//!
//! `Ω_p(ρ)` is a modified auto-regressive covariance with entries
//! `σ_i ρ^{|i-j|^{1/7}} σ_j`, `σ_i ~ U[4/5, 6/5]` (convention `0⁰ = 1`, so
//! `ρ = 0` gives a diagonal matrix). Set sizes follow
//! `n_i = max(⌊N(20, 5²)⌋, 10)` and classes are exactly balanced.
//!
//! Everything is deterministic in the seed: replication `t` draws from an
//! RNG stream derived from `(seed, t)`, so replications can be evaluated in
//! any order (or concurrently) without changing a single number.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, ChiSquared, Distribution, Normal, StandardNormal, Uniform};

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::classify::{
    fit_mdeb, fit_ridge_lda, fit_ridge_qda, fit_ya, vote_classify, BaseRule, VoteMode,
    DEFAULT_GAMMA,
};
use crate::linalg::{psd_factor, sorted_symmetric_eigen};
use crate::pipeline::{predict, train, ClassifierKind, TrainConfig, TrainedSetClassifier};
use crate::set::{ClassLabel, ObservationSet, SetCollection};
use crate::{Error, Result};

/// Set-size law constants: `n_i = max(⌊N(20, 5²)⌋, 10)`.
const SET_SIZE_MEAN: f64 = 20.0;
const SET_SIZE_SD: f64 = 5.0;
const SET_SIZE_MIN: usize = 10;

/// Which covariance law generates the per-set scatter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "std", serde(try_from = "u8", into = "u8"))]
pub enum SimulationModel {
    /// Model 1: every set shares one covariance.
    SharedCovariance,
    /// Model 2: Wishart scatter around a class-spiked target.
    WishartScatter,
    /// Model 3: inverse-Wishart scatter around a class-spiked target.
    InverseWishartScatter,
    /// Model 4: rank-one spike in a class-concentrated random direction.
    RandomDirectionSpike,
}

impl SimulationModel {
    /// Numeric id (1–4) used on the command line and in reports.
    pub fn id(self) -> u8 {
        match self {
            SimulationModel::SharedCovariance => 1,
            SimulationModel::WishartScatter => 2,
            SimulationModel::InverseWishartScatter => 3,
            SimulationModel::RandomDirectionSpike => 4,
        }
    }
}

impl TryFrom<u8> for SimulationModel {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(SimulationModel::SharedCovariance),
            2 => Ok(SimulationModel::WishartScatter),
            3 => Ok(SimulationModel::InverseWishartScatter),
            4 => Ok(SimulationModel::RandomDirectionSpike),
            other => Err(Error::InvalidConfig(alloc::format!(
                "simulation model must be 1..=4, got {other}"
            ))),
        }
    }
}

impl From<SimulationModel> for u8 {
    fn from(model: SimulationModel) -> u8 {
        model.id()
    }
}

/// Full description of one benchmark scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationConfig {
    /// Covariance law (models 1–4).
    pub model: SimulationModel,
    /// Observation dimension `p`.
    pub dim: usize,
    /// Number of training sets `N` (even; classes are balanced).
    pub n_sets: usize,
    /// Number of test sets per replication; defaults to `n_sets`.
    pub test_sets: Option<usize>,
    /// Class-1 mean shift `δ` along the first axis.
    pub mean_shift: f64,
    /// Scale `σ` of the rank-one covariance spike (`σ²·uuᵀ`).
    pub spike_scale: f64,
    /// Auto-regressive correlation `ρ ∈ [0, 1]`.
    pub correlation: f64,
    /// Wishart degrees of freedom `m` for model 2 (raised to the dimension
    /// when smaller, keeping the scatter draw nonsingular).
    pub wishart_df: usize,
    /// von Mises–Fisher concentration `κ` for model 4.
    pub concentration: f64,
    /// Master seed; every random quantity derives from it.
    pub seed: u64,
    /// Number of independent replications.
    pub replications: usize,
}

impl SimulationConfig {
    /// A scenario with the benchmark defaults: `δ = 1`, `σ = 3`, `ρ = 0`,
    /// `m = 10`, `κ = 100`, 100 replications and as many test sets as
    /// training sets.
    pub fn new(model: SimulationModel, dim: usize, n_sets: usize, seed: u64) -> Self {
        SimulationConfig {
            model,
            dim,
            n_sets,
            test_sets: None,
            mean_shift: 1.0,
            spike_scale: 3.0,
            correlation: 0.0,
            wishart_df: 10,
            concentration: 100.0,
            seed,
            replications: 100,
        }
    }

    /// Validates the invariants: even positive set counts, `ρ ∈ [0, 1]`,
    /// positive dimension and hyperparameters.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        for (name, count) in [
            ("training sets", Some(self.n_sets)),
            ("test sets", self.test_sets),
        ] {
            if let Some(count) = count {
                if count < 2 || count % 2 != 0 {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "{name} must be an even count of at least 2, got {count}"
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::InvalidConfig(alloc::format!(
                "correlation must lie in [0, 1], got {}",
                self.correlation
            )));
        }
        if !self.mean_shift.is_finite() || !self.spike_scale.is_finite() {
            return Err(Error::InvalidConfig(
                "mean shift and spike scale must be finite".into(),
            ));
        }
        if self.spike_scale < 0.0 {
            return Err(Error::InvalidConfig("spike scale must be nonnegative".into()));
        }
        if self.wishart_df == 0 {
            return Err(Error::InvalidConfig(
                "Wishart degrees of freedom must be positive".into(),
            ));
        }
        if self.concentration < 0.0 || !self.concentration.is_finite() {
            return Err(Error::InvalidConfig(
                "concentration must be a nonnegative real".into(),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "need at least one replication".into(),
            ));
        }
        Ok(())
    }

    fn test_count(&self) -> usize {
        self.test_sets.unwrap_or(self.n_sets)
    }
}

/// RNG stream for replication `index`; streams never overlap for a fixed
/// master seed.
fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64 step, used to give sub-procedures (e.g. each replication's
/// permutation test) their own decorrelated seed.
fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Modified auto-regressive covariance `Ω_p(ρ)` with entries
/// `σ_i ρ^{|i-j|^{1/7}} σ_j` and `σ_i ~ U[4/5, 6/5]`.
///
/// The diagonal is `σ_i²` for every `ρ` (convention `0⁰ = 1`). The result is
/// checked to be positive semidefinite (eigenvalues ≥ −1e-10 relative); a
/// failure indicates an implementation bug rather than a data condition.
pub fn omega_cov(dim: usize, rho: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(alloc::format!(
            "correlation must lie in [0, 1], got {rho}"
        )));
    }
    let spread = Uniform::new(0.8, 1.2).expect("static bounds are valid");
    let sigmas: Vec<f64> = (0..dim).map(|_| spread.sample(rng)).collect();

    let mut cov = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        cov[(i, i)] = sigmas[i] * sigmas[i];
        for j in 0..i {
            let gap = (i - j) as f64;
            let value = sigmas[i] * sigmas[j] * rho.powf(gap.powf(1.0 / 7.0));
            cov[(i, j)] = value;
            cov[(j, i)] = value;
        }
    }

    let (values, _) = sorted_symmetric_eigen(cov.clone())?;
    let floor = -1e-10 * values[0].max(1.0);
    if values[dim - 1] < floor {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: values[dim - 1],
        });
    }
    Ok(cov)
}

/// Factor `F` with `W = F Fᵀ` for a Wishart draw `W ~ W_p(V, df)`.
///
/// Uses the Bartlett decomposition when `df ≥ p`; for `df < p` (a singular
/// Wishart) it falls back to the definition as a sum of `df` outer products
/// of `N_p(0, V)` draws, which has the same law.
fn wishart_factor(scale_factor: &DMatrix<f64>, df: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let p = scale_factor.nrows();
    let standard = StandardNormal;
    if df >= p {
        let mut bartlett = DMatrix::zeros(p, p);
        for i in 0..p {
            let chi = ChiSquared::new((df - i) as f64).expect("df - i >= 1");
            bartlett[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                bartlett[(i, j)] = standard.sample(rng);
            }
        }
        scale_factor * bartlett
    } else {
        let draws = DMatrix::from_fn(p, df, |_, _| standard.sample(rng));
        scale_factor * draws
    }
}

/// One draw from the Wishart distribution `W_p(V, df)` with mean `df · V`.
pub fn sample_wishart(v: &DMatrix<f64>, df: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    if df == 0 {
        return Err(Error::InvalidConfig(
            "Wishart degrees of freedom must be positive".into(),
        ));
    }
    let factor = psd_factor(v)?;
    let f = wishart_factor(&factor, df, rng);
    Ok(&f * f.transpose())
}

/// One draw from the inverse-Wishart distribution `IW_p(V, df)`, realized as
/// the inverse of a `W_p(V⁻¹, df)` draw. Requires `df ≥ p` so the Wishart
/// draw is invertible.
pub fn sample_inv_wishart(
    v: &DMatrix<f64>,
    df: usize,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    let factor = inv_wishart_factor(v, df, rng)?;
    Ok(&factor * factor.transpose())
}

/// Factor `F` with `W⁻¹ = F Fᵀ` for `W ~ W_p(V⁻¹, df)`.
fn inv_wishart_factor(v: &DMatrix<f64>, df: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let p = v.nrows();
    if df < p {
        return Err(Error::InvalidConfig(alloc::format!(
            "inverse-Wishart needs df >= dimension, got df = {df} < p = {p}"
        )));
    }
    let chol = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("inverse-Wishart scale".into()))?;
    let v_inv = chol.inverse();
    let lower = v_inv
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("inverted inverse-Wishart scale".into()))?
        .unpack();
    let bartlett = wishart_factor(&lower, df, rng);
    // W = B Bᵀ with B = lower · Bartlett, a product of lower-triangular
    // factors, so W⁻¹ = (B⁻¹)ᵀ B⁻¹
    let inverse = bartlett
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularMatrix("Wishart draw not invertible".into()))?;
    Ok(inverse.transpose())
}

/// One draw from the von Mises–Fisher distribution on the unit sphere with
/// mode `mean_direction` and concentration `kappa ≥ 0` (0 = uniform).
///
/// Uses the standard rejection scheme: the cosine of the angle to the mode is
/// drawn through a Beta envelope, the orthogonal part is uniform on the
/// equator.
pub fn sample_vmf(
    mean_direction: &DVector<f64>,
    kappa: f64,
    rng: &mut impl Rng,
) -> Result<DVector<f64>> {
    let p = mean_direction.len();
    if p < 2 {
        return Err(Error::InvalidConfig(
            "direction sampling needs dimension at least 2".into(),
        ));
    }
    if (mean_direction.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidConfig(
            "the mean direction must be a unit vector".into(),
        ));
    }
    if kappa < 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!(
            "concentration must be a nonnegative real, got {kappa}"
        )));
    }

    let pm1 = (p - 1) as f64;
    // conjugate form to avoid cancellation at large kappa
    let b = pm1 / (2.0 * kappa + (4.0 * kappa * kappa + pm1 * pm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + pm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(pm1 / 2.0, pm1 / 2.0).expect("shape parameters are positive");

    let mut cosine = 1.0;
    let mut accepted = false;
    for _ in 0..10_000 {
        let z: f64 = beta.sample(rng);
        let u: f64 = rng.random();
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if kappa * w + pm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            cosine = w;
            accepted = true;
            break;
        }
    }
    if !accepted {
        return Err(Error::InvalidConfig(
            "direction sampler failed to accept; concentration out of usable range".into(),
        ));
    }

    // uniform direction in the tangent space of the mode
    let standard = StandardNormal;
    let tangent = loop {
        let mut z = DVector::from_fn(p, |_, _| standard.sample(rng));
        let along = mean_direction.dot(&z);
        z.axpy(-along, mean_direction, 1.0);
        let norm = z.norm();
        if norm > 1e-12 {
            break z / norm;
        }
    };

    let mut draw = tangent * (1.0 - cosine * cosine).max(0.0).sqrt() + mean_direction * cosine;
    draw.normalize_mut();
    Ok(draw)
}

/// A matched pair of freshly generated collections.
#[derive(Clone, Debug)]
pub struct GeneratedData {
    /// Labeled training collection of `n_sets` sets.
    pub train: SetCollection,
    /// Labeled test collection drawn independently from the same population.
    pub test: SetCollection,
}

/// Per-replication covariance machinery, set up once per replication.
struct CovarianceLaw {
    model: SimulationModel,
    spike_scale: f64,
    wishart_df: usize,
    concentration: f64,
    /// `F FᵀT = Ω` (models 1 and 4).
    omega_factor: DMatrix<f64>,
    /// Per-class spiked-target factors (models 2 and 3); index 0 = class 1.
    class_factors: [DMatrix<f64>; 2],
}

impl CovarianceLaw {
    fn prepare(config: &SimulationConfig, omega: &DMatrix<f64>) -> Result<Self> {
        let p = config.dim;
        let identityless = DMatrix::zeros(0, 0);
        let omega_factor = match config.model {
            SimulationModel::SharedCovariance | SimulationModel::RandomDirectionSpike => {
                psd_factor(omega)?
            }
            _ => identityless.clone(),
        };
        let class_factors = match config.model {
            SimulationModel::WishartScatter | SimulationModel::InverseWishartScatter => {
                let mut factors = [identityless.clone(), identityless];
                for k in 0..2 {
                    let mut target = omega.clone();
                    target[(k, k)] += config.spike_scale * config.spike_scale;
                    factors[k] = match config.model {
                        SimulationModel::WishartScatter => psd_factor(&target)?,
                        // stash the *scale* itself; the inverse-Wishart path
                        // refactors per draw
                        _ => target,
                    };
                }
                factors
            }
            _ => [identityless.clone(), identityless],
        };
        if p < 2 && config.model == SimulationModel::RandomDirectionSpike {
            return Err(Error::InvalidConfig(
                "the random-direction model needs dimension at least 2".into(),
            ));
        }
        Ok(CovarianceLaw {
            model: config.model,
            spike_scale: config.spike_scale,
            wishart_df: config.wishart_df,
            concentration: config.concentration,
            omega_factor,
            class_factors,
        })
    }

    /// Draws the factor `F` of one set's covariance (`Σ = F Fᵀ`).
    fn draw_factor(&self, class: usize, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
        match self.model {
            SimulationModel::SharedCovariance => Ok(self.omega_factor.clone()),
            SimulationModel::WishartScatter => {
                // degrees of freedom below the dimension are raised to it:
                // the classical Wishart density needs df >= p, and a singular
                // scatter would confine every set to an m-dimensional slice
                let df = self.wishart_df.max(self.class_factors[class].nrows());
                let f = wishart_factor(&self.class_factors[class], df, rng);
                Ok(f / (df as f64).sqrt())
            }
            SimulationModel::InverseWishartScatter => {
                let p = self.class_factors[class].nrows();
                let f = inv_wishart_factor(&self.class_factors[class], p, rng)?;
                Ok(f * (p as f64).sqrt())
            }
            SimulationModel::RandomDirectionSpike => {
                let p = self.omega_factor.nrows();
                let mut mode = DVector::zeros(p);
                mode[class] = 1.0;
                let direction = sample_vmf(&mode, self.concentration, rng)?;
                let mut factor = DMatrix::zeros(p, p + 1);
                factor.view_mut((0, 0), (p, p)).copy_from(&self.omega_factor);
                factor
                    .column_mut(p)
                    .copy_from(&(direction * self.spike_scale));
                Ok(factor)
            }
        }
    }
}

fn draw_set(
    law: &CovarianceLaw,
    config: &SimulationConfig,
    set_id: String,
    class: usize,
    rng: &mut impl Rng,
) -> Result<ObservationSet> {
    let p = config.dim;
    let standard = StandardNormal;
    let size_law = Normal::new(SET_SIZE_MEAN, SET_SIZE_SD).expect("static parameters");

    let n: usize = {
        let draw: f64 = size_law.sample(rng);
        let floored = draw.floor();
        if floored < SET_SIZE_MIN as f64 {
            SET_SIZE_MIN
        } else {
            floored as usize
        }
    };

    // set mean: N_p(delta_(k), 10^-2 I)
    let mut mean = DVector::from_fn(p, |_, _| {
        let z: f64 = standard.sample(rng);
        0.1 * z
    });
    if class == 0 {
        mean[0] += config.mean_shift;
    }

    let factor = law.draw_factor(class, rng)?;
    let latent = DMatrix::from_fn(factor.ncols(), n, |_, _| standard.sample(rng));
    let mut observations = factor * latent;
    for j in 0..n {
        observations.column_mut(j).axpy(1.0, &mean, 1.0);
    }

    ObservationSet::new(
        set_id,
        observations,
        Some(ClassLabel::new(class as u32 + 1).expect("1 and 2 are valid labels")),
    )
}

fn draw_collection(
    law: &CovarianceLaw,
    config: &SimulationConfig,
    prefix: &str,
    count: usize,
    rng: &mut impl Rng,
) -> Result<SetCollection> {
    let mut sets = Vec::with_capacity(count);
    for i in 0..count {
        let class = usize::from(i >= count / 2);
        sets.push(draw_set(
            law,
            config,
            alloc::format!("{prefix}-{i:03}"),
            class,
            rng,
        )?);
    }
    SetCollection::new(sets)
}

/// Generates the training and test collections for replication `index`.
///
/// Bit-for-bit deterministic in `(config, index)`.
pub fn generate_replication(config: &SimulationConfig, index: u64) -> Result<GeneratedData> {
    config.validate()?;
    let mut rng = replication_rng(config.seed, index);
    let omega = omega_cov(config.dim, config.correlation, &mut rng)?;
    let law = CovarianceLaw::prepare(config, &omega)?;
    let train = draw_collection(&law, config, "train", config.n_sets, &mut rng)?;
    let test = draw_collection(&law, config, "test", config.test_count(), &mut rng)?;
    Ok(GeneratedData { train, test })
}

/// Generates one dataset (replication 0 of the configured scenario).
pub fn generate_dataset(config: &SimulationConfig) -> Result<GeneratedData> {
    generate_replication(config, 0)
}

/// A set classification method evaluated by the benchmark harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    /// Feature pipeline with ridge LDA on the combined features.
    PcfLda,
    /// Feature pipeline with ridge QDA.
    PcfQda,
    /// Feature pipeline with the MDEB rule.
    PcfMdeb,
    /// Feature pipeline with the YA rule.
    PcfYa,
    /// Pooled-observation ridge LDA, majority voting.
    LdaMv,
    /// Pooled-observation ridge LDA, weighted voting.
    LdaWv,
    /// Pooled-observation ridge QDA, majority voting.
    QdaMv,
    /// Pooled-observation ridge QDA, weighted voting.
    QdaWv,
    /// Pooled-observation MDEB, majority voting.
    MdebMv,
    /// Pooled-observation MDEB, weighted voting.
    MdebWv,
    /// Pooled-observation YA rule, majority voting.
    Ya,
}

impl Method {
    /// Every known method, in report order.
    pub fn all() -> &'static [Method] {
        &[
            Method::PcfLda,
            Method::PcfQda,
            Method::PcfMdeb,
            Method::PcfYa,
            Method::LdaMv,
            Method::LdaWv,
            Method::QdaMv,
            Method::QdaWv,
            Method::MdebMv,
            Method::MdebWv,
            Method::Ya,
        ]
    }

    /// Canonical display name (e.g. `PCF-LDA`).
    pub fn name(self) -> &'static str {
        match self {
            Method::PcfLda => "PCF-LDA",
            Method::PcfQda => "PCF-QDA",
            Method::PcfMdeb => "PCF-MDEB",
            Method::PcfYa => "PCF-YA",
            Method::LdaMv => "LDA-MV",
            Method::LdaWv => "LDA-WV",
            Method::QdaMv => "QDA-MV",
            Method::QdaWv => "QDA-WV",
            Method::MdebMv => "MDEB-MV",
            Method::MdebWv => "MDEB-WV",
            Method::Ya => "YA",
        }
    }

    /// Parses a canonical name (case-insensitive).
    pub fn from_name(name: &str) -> Result<Method> {
        Method::all()
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown method `{name}`")))
    }

    fn pcf_classifier(self) -> Option<ClassifierKind> {
        match self {
            Method::PcfLda => Some(ClassifierKind::RidgeLda),
            Method::PcfQda => Some(ClassifierKind::RidgeQda),
            Method::PcfMdeb => Some(ClassifierKind::Mdeb),
            Method::PcfYa => Some(ClassifierKind::Ya),
            _ => None,
        }
    }

    fn voting(self) -> Option<(PooledFamily, VoteMode)> {
        match self {
            Method::LdaMv => Some((PooledFamily::Lda, VoteMode::Majority)),
            Method::LdaWv => Some((PooledFamily::Lda, VoteMode::Weighted)),
            Method::QdaMv => Some((PooledFamily::Qda, VoteMode::Majority)),
            Method::QdaWv => Some((PooledFamily::Qda, VoteMode::Weighted)),
            Method::MdebMv => Some((PooledFamily::Mdeb, VoteMode::Majority)),
            Method::MdebWv => Some((PooledFamily::Mdeb, VoteMode::Weighted)),
            Method::Ya => Some((PooledFamily::Ya, VoteMode::Majority)),
            _ => None,
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum PooledFamily {
    Lda,
    Qda,
    Mdeb,
    Ya,
}

/// Pooled-observation training data and lazily fitted family rules.
struct PooledBaselines {
    x: DMatrix<f64>,
    y: Vec<i8>,
    fitted: [Option<Result<BaseRule>>; 4],
}

impl PooledBaselines {
    fn build(train: &SetCollection) -> Self {
        let p = train.dim();
        let total: usize = train.sets().iter().map(ObservationSet::n_observations).sum();
        let mut x = DMatrix::zeros(p, total);
        let mut y = Vec::with_capacity(total);
        let mut col = 0;
        for set in train.sets() {
            let label = if set.label().map(|l| l.get()) == Some(1) {
                1i8
            } else {
                -1i8
            };
            for j in 0..set.n_observations() {
                x.set_column(col, &set.observations().column(j));
                y.push(label);
                col += 1;
            }
        }
        PooledBaselines {
            x,
            y,
            fitted: [None, None, None, None],
        }
    }

    fn rule(&mut self, family: PooledFamily) -> Result<BaseRule> {
        let slot = family as usize;
        if self.fitted[slot].is_none() {
            let fitted = match family {
                PooledFamily::Lda => {
                    fit_ridge_lda(&self.x, &self.y, DEFAULT_GAMMA).map(BaseRule::Linear)
                }
                PooledFamily::Qda => {
                    fit_ridge_qda(&self.x, &self.y, DEFAULT_GAMMA).map(BaseRule::Quadratic)
                }
                PooledFamily::Mdeb => fit_mdeb(&self.x, &self.y).map(BaseRule::Linear),
                PooledFamily::Ya => fit_ya(&self.x, &self.y).map(BaseRule::Linear),
            };
            self.fitted[slot] = Some(fitted);
        }
        self.fitted[slot]
            .as_ref()
            .expect("just fitted")
            .clone()
    }
}

fn misclassification_pct<F>(test: &SetCollection, mut classify: F) -> Result<f64>
where
    F: FnMut(&ObservationSet) -> Result<ClassLabel>,
{
    let mut wrong = 0usize;
    for set in test.sets() {
        let truth = set
            .label()
            .ok_or_else(|| Error::InvalidCollection("test sets must be labeled".into()))?;
        if classify(set)? != truth {
            wrong += 1;
        }
    }
    Ok(100.0 * wrong as f64 / test.n_sets() as f64)
}

/// Evaluates every requested method on one fresh replication, returning the
/// per-method misclassification percentage (or the error that prevented it).
pub fn benchmark_replication(
    config: &SimulationConfig,
    index: u64,
    methods: &[Method],
) -> Result<Vec<(Method, Result<f64>)>> {
    let data = generate_replication(config, index)?;
    let mut pooled = PooledBaselines::build(&data.train);
    let mut pcf_models: Vec<(ClassifierKind, Result<TrainedSetClassifier>)> = Vec::new();

    let mut results = Vec::with_capacity(methods.len());
    for &method in methods {
        let outcome = if let Some(kind) = method.pcf_classifier() {
            let model = match pcf_models.iter().find(|(k, _)| *k == kind) {
                Some((_, cached)) => cached.clone(),
                None => {
                    // the set-size law guarantees only SET_SIZE_MIN
                    // observations per future set, so ranks beyond
                    // SET_SIZE_MIN - 1 could never be applied at prediction
                    let rank_cap = data
                        .train
                        .max_informative_rank()
                        .clamp(1, SET_SIZE_MIN - 1);
                    let trained = train(
                        &data.train,
                        &TrainConfig {
                            classifier: kind,
                            seed: derive_seed(config.seed, index),
                            max_rank: Some(rank_cap),
                            ..TrainConfig::default()
                        },
                    );
                    pcf_models.push((kind, trained.clone()));
                    trained
                }
            };
            model.and_then(|model| {
                misclassification_pct(&data.test, |set| predict(&model, set))
            })
        } else {
            let (family, mode) = method.voting().expect("non-PCF methods vote");
            pooled.rule(family).and_then(|rule| {
                misclassification_pct(&data.test, |set| {
                    let vote = vote_classify(&rule, set, mode)?;
                    ClassLabel::new(if vote == 1 { 1 } else { 2 })
                })
            })
        };
        results.push((method, outcome));
    }
    Ok(results)
}

/// Summary of one method over all replications.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodSummary {
    /// The evaluated method.
    pub method: Method,
    /// Mean misclassification rate in percent over successful replications.
    pub mean_error: f64,
    /// Sample standard deviation of the per-replication rates; `None` with
    /// fewer than two successful replications.
    pub std_dev: Option<f64>,
    /// Standard error of the mean (`std_dev / √k`).
    pub std_error: Option<f64>,
    /// Successful replications.
    pub replications_used: usize,
    /// Replications where this method failed.
    pub failures: usize,
}

/// Misclassification summaries for one scenario.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "std", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkReport {
    /// The scenario that was run.
    pub config: SimulationConfig,
    /// One summary per requested method, in request order.
    pub methods: Vec<MethodSummary>,
}

/// Merges per-replication results into a report. Order-independent: the
/// summaries depend only on the multiset of values per method.
pub fn summarize_benchmark(
    config: &SimulationConfig,
    methods: &[Method],
    per_replication: &[Vec<(Method, Result<f64>)>],
) -> BenchmarkReport {
    let summaries = methods
        .iter()
        .map(|&method| {
            let mut errors: Vec<f64> = Vec::new();
            let mut failures = 0usize;
            for rep in per_replication {
                for (m, outcome) in rep {
                    if *m == method {
                        match outcome {
                            Ok(e) => errors.push(*e),
                            Err(_) => failures += 1,
                        }
                    }
                }
            }
            let k = errors.len();
            let mean = if k == 0 {
                f64::NAN
            } else {
                errors.iter().sum::<f64>() / k as f64
            };
            let std_dev = if k >= 2 {
                let ss: f64 = errors.iter().map(|e| (e - mean) * (e - mean)).sum();
                Some((ss / (k - 1) as f64).sqrt())
            } else {
                None
            };
            MethodSummary {
                method,
                mean_error: mean,
                std_dev,
                std_error: std_dev.map(|sd| sd / (k as f64).sqrt()),
                replications_used: k,
                failures,
            }
        })
        .collect();
    BenchmarkReport {
        config: *config,
        methods: summaries,
    }
}

/// Runs the full benchmark sequentially: for each replication, fresh train
/// and test collections are generated, every method is trained and scored,
/// and the per-method mean error and spread are reported.
///
/// A method failing on some replication is recorded in its failure count and
/// excluded from that replication's average; it does not abort the run.
pub fn run_benchmark(config: &SimulationConfig, methods: &[Method]) -> Result<BenchmarkReport> {
    config.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    let mut per_replication = Vec::with_capacity(config.replications);
    for rep in 0..config.replications {
        per_replication.push(benchmark_replication(config, rep as u64, methods)?);
    }
    Ok(summarize_benchmark(config, methods, &per_replication))
}
