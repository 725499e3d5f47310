//! Monte Carlo and agreement checks for the discriminant rules and voting
//! wrappers.

use nalgebra::{DMatrix, DVector, DVectorView};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use setclass_core::classify::{
    fit_ridge_lda, fit_ya, vote_classify, BaseRule, VoteMode,
};
use setclass_core::set::ObservationSet;

fn gaussian_matrix(rng: &mut ChaCha8Rng, p: usize, n: usize) -> DMatrix<f64> {
    let normal = StandardNormal;
    DMatrix::from_fn(p, n, |_, _| normal.sample(rng))
}

/// Under a shared per-class distribution (no set-level parameter variation),
/// weighted voting should beat majority voting on average: the score sum is
/// the plug-in likelihood-ratio rule while sign-counting discards magnitude.
#[test]
fn weighted_voting_beats_majority_on_shared_distributions() {
    let p = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = StandardNormal;
    let mut mv_total = 0.0;
    let mut wv_total = 0.0;

    for _ in 0..50 {
        // train: 40 observations per class, means +-0.35 e1
        let n_per_class = 40;
        let mut train = gaussian_matrix(&mut rng, p, 2 * n_per_class);
        let mut labels = vec![1i8; 2 * n_per_class];
        for j in 0..2 * n_per_class {
            let sign = if j < n_per_class { 1.0 } else { -1.0 };
            train[(0, j)] += 0.35 * sign;
            labels[j] = if j < n_per_class { 1 } else { -1 };
        }
        let rule = BaseRule::Linear(fit_ridge_lda(&train, &labels, 0.01).unwrap());

        // test: 40 sets of 15 observations each, same two populations
        let mut mv_wrong = 0;
        let mut wv_wrong = 0;
        let sets = 40;
        for s in 0..sets {
            let truth: i8 = if s % 2 == 0 { 1 } else { -1 };
            let mut data = gaussian_matrix(&mut rng, p, 15);
            for j in 0..15 {
                data[(0, j)] += 0.35 * truth as f64;
                let _: f64 = normal.sample(&mut rng); // decorrelate draws across sets
            }
            let set = ObservationSet::new("mc", data, None).unwrap();
            if vote_classify(&rule, &set, VoteMode::Majority).unwrap() != truth {
                mv_wrong += 1;
            }
            if vote_classify(&rule, &set, VoteMode::Weighted).unwrap() != truth {
                wv_wrong += 1;
            }
        }
        mv_total += mv_wrong as f64 / sets as f64;
        wv_total += wv_wrong as f64 / sets as f64;
    }

    let mv_mean = mv_total / 50.0;
    let wv_mean = wv_total / 50.0;
    assert!(
        wv_mean <= mv_mean,
        "weighted {wv_mean:.4} should not lose to majority {mv_mean:.4} on average"
    );
}

/// With a vanishing ridge on well-conditioned data, ridge LDA reproduces the
/// classical Fisher discriminant decision for decision on a query grid.
#[test]
fn tiny_ridge_matches_classical_fisher_decisions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = 3;
    let n = 60;
    let mut x = gaussian_matrix(&mut rng, p, n);
    let mut y = vec![1i8; n];
    for j in 0..n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        x[(0, j)] += sign;
        y[j] = if j % 2 == 0 { 1 } else { -1 };
    }
    // classical Fisher = zero ridge (valid here: n >> p)
    let fisher = fit_ridge_lda(&x, &y, 0.0).unwrap();
    let ridged = fit_ridge_lda(&x, &y, 1e-10).unwrap();
    for t in 0..100 {
        let q = DVector::from_fn(p, |i, _| ((t * (i + 3)) % 17) as f64 / 4.0 - 2.0);
        assert_eq!(
            fisher.classify(&DVectorView::from(&q)),
            ridged.classify(&DVectorView::from(&q))
        );
    }
}

/// On near-identity covariance with plenty of data, the hard-thresholded
/// covariance barely changes anything: decisions agree with a small-ridge
/// LDA.
#[test]
fn thresholded_covariance_agrees_with_small_ridge_when_benign() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let p = 4;
    let n = 400;
    let mut x = gaussian_matrix(&mut rng, p, n);
    let mut y = vec![1i8; n];
    for j in 0..n {
        let sign = if j < n / 2 { 1.0 } else { -1.0 };
        x[(0, j)] += 0.8 * sign;
        y[j] = if j < n / 2 { 1 } else { -1 };
    }
    let ya = fit_ya(&x, &y).unwrap();
    let lda = fit_ridge_lda(&x, &y, 1e-6).unwrap();
    let mut agree = 0;
    let total = 200;
    for t in 0..total {
        let q = DVector::from_fn(p, |i, _| ((t * (i + 2) * 13) % 29) as f64 / 7.0 - 2.0);
        if ya.classify(&DVectorView::from(&q)) == lda.classify(&DVectorView::from(&q)) {
            agree += 1;
        }
    }
    assert!(agree >= 195, "only {agree}/{total} grid decisions agree");
}
