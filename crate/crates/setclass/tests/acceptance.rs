//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `cargo test -p setclass --test acceptance -- --nocapture`).
//!
//! Every tolerance is pinned in code next to the check it gates.

use std::process::Command;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use setclass::core::classify::{fit_mdeb, vote_classify, BaseRule, VoteMode};
use setclass::core::embedding::{cmds_fit, DEFAULT_EIG_TOL};
use setclass::core::features::{pairwise_distances, scale_constant, subspace_distance, DistanceMatrix};
use setclass::core::nalgebra::DMatrix;
use setclass::core::pipeline::{predict, train, ClassifierKind, TrainConfig};
use setclass::core::selection::{
    hotelling_t, permutation_test, select_dimension, ScalePolicy, SelectionStatistic,
};
use setclass::core::set::ClassLabel;
use setclass::core::simulate::{
    generate_replication, omega_cov, Method, SimulationConfig, SimulationModel,
};
use setclass::bench::run_benchmark_parallel;

fn check(criterion: u32, description: &str, pass: bool, details: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance criterion {criterion} ({description}): {verdict} [{details}]");
    assert!(pass, "criterion {criterion} ({description}): {details}");
}

fn mean_error(report: &setclass::core::simulate::BenchmarkReport, method: Method) -> f64 {
    let summary = report
        .methods
        .iter()
        .find(|m| m.method == method)
        .expect("method present");
    assert_eq!(summary.failures, 0, "{} had failures", method.name());
    summary.mean_error
}

/// Criterion 1: strong covariance signal at (p, N) = (20, 10). The feature
/// pipeline must stay below 12% mean error over 50 replications and beat
/// pooled weighted voting by at least 25 percentage points.
#[test]
fn criterion_1_strong_signal_low_dimension() {
    let mut config = SimulationConfig::new(SimulationModel::WishartScatter, 20, 10, 20101);
    config.replications = 50;
    let report =
        run_benchmark_parallel(&config, &[Method::PcfLda, Method::LdaWv], None).unwrap();
    let pcf = mean_error(&report, Method::PcfLda);
    let wv = mean_error(&report, Method::LdaWv);
    check(
        1,
        "strong signal, (p,N)=(20,10)",
        pcf <= 12.0 && (wv - pcf) >= 25.0,
        format!("PCF-LDA {pcf:.2}% (<= 12), LDA-WV {wv:.2}% (gap {:.2} >= 25)", wv - pcf),
    );
}

/// Criterion 2: strong signal in high dimension, (p, N) = (400, 20), 25
/// replications: pipeline error at most 8%, pooled weighted voting at least
/// 35%.
#[test]
fn criterion_2_strong_signal_high_dimension() {
    let mut config = SimulationConfig::new(SimulationModel::WishartScatter, 400, 20, 20202);
    config.replications = 25;
    let report =
        run_benchmark_parallel(&config, &[Method::PcfLda, Method::LdaWv], None).unwrap();
    let pcf = mean_error(&report, Method::PcfLda);
    let wv = mean_error(&report, Method::LdaWv);
    check(
        2,
        "strong signal, (p,N)=(400,20)",
        pcf <= 8.0 && wv >= 35.0,
        format!("PCF-LDA {pcf:.2}% (<= 8), LDA-WV {wv:.2}% (>= 35)"),
    );
}

/// Criterion 3: no covariance signal at (20, 10): the pipeline with the MDEB
/// rule must land within 6 percentage points of pooled MDEB weighted voting,
/// and the permutation test must discard the subspace features in at least
/// 85% of 50 replications.
#[test]
fn criterion_3_no_signal_safety() {
    let mut config = SimulationConfig::new(SimulationModel::SharedCovariance, 20, 10, 30303);
    config.replications = 50;

    let mut pcf_errors = Vec::new();
    let mut wv_errors = Vec::new();
    let mut discarded = 0usize;
    for rep in 0..config.replications as u64 {
        let data = generate_replication(&config, rep).unwrap();
        let model = train(
            &data.train,
            &TrainConfig {
                classifier: ClassifierKind::Mdeb,
                seed: 30303 ^ rep,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        if model.r_hat() == 0 {
            discarded += 1;
        }
        let mut wrong = 0;
        for set in data.test.sets() {
            if predict(&model, set).unwrap() != set.label().unwrap() {
                wrong += 1;
            }
        }
        pcf_errors.push(100.0 * wrong as f64 / data.test.n_sets() as f64);

        // pooled MDEB with weighted voting
        let p = data.train.dim();
        let total: usize = data.train.sets().iter().map(|s| s.n_observations()).sum();
        let mut x = DMatrix::zeros(p, total);
        let mut y = Vec::with_capacity(total);
        let mut col = 0;
        for set in data.train.sets() {
            let label: i8 = if set.label().unwrap().get() == 1 { 1 } else { -1 };
            for j in 0..set.n_observations() {
                x.set_column(col, &set.observations().column(j));
                y.push(label);
                col += 1;
            }
        }
        let rule = BaseRule::Linear(fit_mdeb(&x, &y).unwrap());
        let mut wrong = 0;
        for set in data.test.sets() {
            let vote = vote_classify(&rule, set, VoteMode::Weighted).unwrap();
            let predicted = ClassLabel::new(if vote == 1 { 1 } else { 2 }).unwrap();
            if predicted != set.label().unwrap() {
                wrong += 1;
            }
        }
        wv_errors.push(100.0 * wrong as f64 / data.test.n_sets() as f64);
    }

    let pcf = pcf_errors.iter().sum::<f64>() / pcf_errors.len() as f64;
    let wv = wv_errors.iter().sum::<f64>() / wv_errors.len() as f64;
    let discard_rate = discarded as f64 / config.replications as f64;
    check(
        3,
        "no covariance signal, (p,N)=(20,10)",
        (pcf - wv).abs() <= 6.0 && discard_rate >= 0.85,
        format!(
            "PCF-MDEB {pcf:.2}% vs MDEB-WV {wv:.2}% (gap {:.2} <= 6), features discarded {:.0}% (>= 85%)",
            (pcf - wv).abs(),
            100.0 * discard_rate
        ),
    );
}

/// Criterion 4: under the null, permutation p-values over 200 seeded runs at
/// (p, N) = (10, 20) with 200 permutations pass a Kolmogorov-Smirnov
/// uniformity check at the 1% level.
#[test]
fn criterion_4_permutation_null_uniformity() {
    let config = SimulationConfig::new(SimulationModel::SharedCovariance, 10, 20, 40404);
    let runs = 200;
    let mut p_values = Vec::with_capacity(runs);
    for rep in 0..runs as u64 {
        let data = generate_replication(&config, rep).unwrap();
        let selection = select_dimension(
            &data.train,
            data.train.max_informative_rank(),
            ScalePolicy::TotalVariance,
            SelectionStatistic::SumSquaredT,
        )
        .unwrap();
        let tested = permutation_test(&data.train, &selection, 200, 0.05, 40404 ^ rep).unwrap();
        p_values.push(tested.p_value.unwrap());
    }
    p_values.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // two-sided KS statistic against Uniform(0,1)
    let n = p_values.len() as f64;
    let mut ks = 0.0f64;
    for (i, &p) in p_values.iter().enumerate() {
        let upper = (i + 1) as f64 / n - p;
        let lower = p - i as f64 / n;
        ks = ks.max(upper).max(lower);
    }
    // asymptotic 1% critical value: sqrt(-ln(0.005)/2) / sqrt(200)
    let critical = 1.6276 / n.sqrt();
    check(
        4,
        "permutation-test null uniformity",
        ks < critical,
        format!("KS statistic {ks:.4} < {critical:.4} over {runs} runs"),
    );
}

/// Criterion 5: under a strong covariance signal the permutation test
/// rejects in at least 90% of 100 runs at level 0.05.
#[test]
fn criterion_5_permutation_power() {
    let config = SimulationConfig::new(SimulationModel::WishartScatter, 20, 10, 50505);
    let runs = 100;
    let mut rejections = 0;
    for rep in 0..runs as u64 {
        let data = generate_replication(&config, rep).unwrap();
        let selection = select_dimension(
            &data.train,
            data.train.max_informative_rank(),
            ScalePolicy::TotalVariance,
            SelectionStatistic::SumSquaredT,
        )
        .unwrap();
        let tested = permutation_test(&data.train, &selection, 1000, 0.05, 50505 ^ rep).unwrap();
        if tested.p_value.unwrap() < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / runs as f64;
    check(
        5,
        "permutation-test power",
        rate >= 0.90,
        format!("rejection rate {:.0}% (>= 90%)", 100.0 * rate),
    );
}

/// Criterion 6: on 100 random Euclidean point sets (N <= 12, d <= 4) the
/// embedding reconstructs all pairwise distances within 1e-8 relative and
/// the out-of-sample map returns each training coordinate within 1e-8.
#[test]
fn criterion_6_cmds_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(60606);
    let mut worst_recon = 0.0f64;
    let mut worst_loo = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..=12usize);
        let d = rng.random_range(1..=4usize);
        let points = DMatrix::from_fn(d, n, |_, _| rng.random_range(-5.0..5.0));
        let squared = DMatrix::from_fn(n, n, |i, j| {
            (points.column(i) - points.column(j)).norm_squared()
        });
        if squared.abs().max() < 1e-9 {
            continue;
        }
        let delta = DistanceMatrix::from_squared(squared.clone(), 1.0).unwrap();
        let model = cmds_fit(&delta, DEFAULT_EIG_TOL).unwrap();

        let recovered = DMatrix::from_fn(n, n, |i, j| {
            (model.coordinates().column(i) - model.coordinates().column(j)).norm_squared()
        });
        worst_recon = worst_recon.max((&recovered - &squared).norm() / squared.norm());

        for i in 0..n {
            let row: Vec<f64> = (0..n).map(|j| squared[(i, j)]).collect();
            let ext = model.extend(&row).unwrap();
            let gap = (ext.coordinates() - model.coordinates().column(i)).norm();
            worst_loo = worst_loo.max(gap);
        }
    }
    check(
        6,
        "classical-MDS exactness on Euclidean input",
        worst_recon <= 1e-8 && worst_loo <= 1e-8,
        format!("worst reconstruction {worst_recon:.2e} (<= 1e-8), worst leave-one-in {worst_loo:.2e} (<= 1e-8)"),
    );
}

/// Orthonormal basis from a seeded random matrix via thin QR.
fn random_basis(rng: &mut ChaCha8Rng, p: usize, r: usize) -> DMatrix<f64> {
    loop {
        let raw = DMatrix::from_fn(p, r, |_, _| rng.random_range(-1.0..1.0));
        let q = raw.qr().q();
        let defect = (q.transpose() * &q - DMatrix::identity(r, r)).abs().max();
        if defect < 1e-12 {
            return q;
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Criterion 7: formula oracles. Each quantity matches an independent
/// brute-force recomputation on at least 200 randomized instances to 1e-10
/// relative.
#[test]
fn criterion_7_formula_oracles() {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(70707);

    // diagonal Hotelling statistic vs naive per-coordinate loops
    for case in 0..200 {
        let m = rng.random_range(1..=6usize);
        let n = rng.random_range(4..=20usize);
        let coords = DMatrix::from_fn(m, n, |_, _| rng.random_range(-3.0..3.0));
        let mut labels = vec![false; n];
        for l in labels.iter_mut().take(n / 2) {
            *l = true;
        }
        for i in 0..n {
            labels.swap(i, rng.random_range(0..n));
        }
        let got = hotelling_t(&coords, &labels).unwrap();

        let n1 = labels.iter().filter(|&&g| g).count();
        let mut naive = 0.0;
        for j in 0..m {
            let mean1: f64 = (0..n).filter(|&i| labels[i]).map(|i| coords[(j, i)]).sum::<f64>()
                / n1 as f64;
            let mean2: f64 = (0..n).filter(|&i| !labels[i]).map(|i| coords[(j, i)]).sum::<f64>()
                / (n - n1) as f64;
            let mut pooled = 0.0;
            for i in 0..n {
                let center = if labels[i] { mean1 } else { mean2 };
                pooled += (coords[(j, i)] - center).powi(2);
            }
            pooled /= n as f64;
            if pooled >= 1e-12 {
                naive += (mean1 - mean2).powi(2) / pooled;
            }
        }
        assert!(rel_close(got, naive, TOL), "hotelling case {case}: {got} vs {naive}");
    }

    // subspace distance vs the projector-difference route
    for case in 0..200 {
        let p = rng.random_range(2..=8usize);
        let r = rng.random_range(1..=3usize.min(p - 1));
        let c = rng.random_range(0.1..10.0);
        let l1 = random_basis(&mut rng, p, r);
        let l2 = random_basis(&mut rng, p, r);
        let got = subspace_distance(&l1, &l2, c).unwrap();
        let proj1 = &l1 * l1.transpose();
        let proj2 = &l2 * l2.transpose();
        let naive = c * ((&proj1 - &proj2).norm_squared() / 2.0).max(0.0).sqrt();
        assert!(rel_close(got, naive, TOL), "distance case {case}: {got} vs {naive}");
    }

    // auto-regressive covariance entries vs direct recomputation
    for case in 0..200 {
        let p = rng.random_range(2..=12usize);
        let rho: f64 = if case % 4 == 0 { 0.0 } else { rng.random_range(0.0..1.0) };
        let cov = omega_cov(p, rho, &mut rng).unwrap();
        for i in 0..p {
            for j in 0..p {
                let si = cov[(i, i)].sqrt();
                let sj = cov[(j, j)].sqrt();
                let expected = if i == j {
                    si * si
                } else {
                    si * sj * rho.powf((i.abs_diff(j) as f64).powf(1.0 / 7.0))
                };
                assert!(
                    rel_close(cov[(i, j)], expected, TOL),
                    "omega case {case} entry ({i},{j}): {} vs {expected}",
                    cov[(i, j)]
                );
            }
        }
    }

    // MDEB ridge vs ridge LDA with an independently recomputed trace
    for case in 0..200 {
        let d = rng.random_range(1..=6usize);
        let n = rng.random_range(4..=20usize);
        let x = DMatrix::from_fn(d, n, |_, _| rng.random_range(-2.0..2.0));
        let mut y: Vec<i8> = (0..n).map(|i| if i < n / 2 { 1 } else { -1 }).collect();
        for i in 0..n {
            y.swap(i, rng.random_range(0..n));
        }
        let mdeb = match fit_mdeb(&x, &y) {
            Ok(rule) => rule,
            Err(_) => continue,
        };

        // naive pooled trace: mean squared deviation from the class mean
        let n1 = y.iter().filter(|&&l| l == 1).count();
        let mut trace = 0.0;
        for j in 0..d {
            let mean1: f64 =
                (0..n).filter(|&i| y[i] == 1).map(|i| x[(j, i)]).sum::<f64>() / n1 as f64;
            let mean2: f64 =
                (0..n).filter(|&i| y[i] == -1).map(|i| x[(j, i)]).sum::<f64>() / (n - n1) as f64;
            for i in 0..n {
                let center = if y[i] == 1 { mean1 } else { mean2 };
                trace += (x[(j, i)] - center).powi(2);
            }
        }
        trace /= n as f64;
        let gamma = trace / n.min(d) as f64;
        let ridge = setclass::core::classify::fit_ridge_lda(&x, &y, gamma).unwrap();
        for k in 0..d {
            assert!(
                rel_close(mdeb.weight()[k], ridge.weight()[k], TOL),
                "mdeb case {case} weight {k}"
            );
        }
        assert!(rel_close(mdeb.offset(), ridge.offset(), TOL), "mdeb case {case} offset");
    }

    // hard-thresholded covariance vs a direct eigenvalue-by-eigenvalue rebuild
    for case in 0..200 {
        let p = rng.random_range(2..=8usize);
        let n = rng.random_range(3..=12usize);
        let raw = DMatrix::from_fn(p, n, |_, _| rng.random_range(-2.0..2.0));
        let mean = raw.column_mean();
        let mut centered = raw.clone();
        for j in 0..n {
            centered.set_column(j, &(raw.column(j) - &mean));
        }
        let s = (&centered * centered.transpose()) / n as f64;
        let got = setclass::core::classify::ya_thresholded_covariance(&s, n).unwrap();

        // independent recomputation from the eigen-decomposition
        let eig = s.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let lambda: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let trace: f64 = s.trace();
        let omega = (trace / ((p as f64).sqrt() * (n as f64).powf(0.25)))
            .min(trace / n.min(p) as f64);
        let mut expected = DMatrix::zeros(p, p);
        for (slot, &k) in order.iter().enumerate() {
            let j = slot + 1; // 1-based position in descending order
            let lam = lambda[slot];
            let modified = if j >= n || lam <= 1e-12 * lambda[0].max(1e-300) {
                omega
            } else {
                let tail: f64 = ((j + 1)..=(n - 1).min(p)).map(|i| lambda[i - 1]).sum();
                let denom = lam - tail / (n as f64 - j as f64);
                lam.max(omega * lam / denom)
            };
            let v = eig.eigenvectors.column(k);
            expected += modified * v * v.transpose();
        }
        let rel = (&got - &expected).norm() / expected.norm();
        assert!(rel <= TOL, "thresholded covariance case {case}: rel {rel:.2e}");
    }

    check(
        7,
        "formula oracles (Hotelling, subspace distance, AR covariance, MDEB ridge, thresholded covariance)",
        true,
        "5 x 200 randomized cases at 1e-10 relative".into(),
    );
}

/// Criterion 8: with four sets the permutation test enumerates all label
/// assignments, and its p-value equals an independent exhaustive count.
#[test]
fn criterion_8_exhaustive_permutation_equivalence() {
    let config = SimulationConfig::new(SimulationModel::WishartScatter, 6, 4, 80808);
    let mut checked = 0;
    for rep in 0..10u64 {
        let data = generate_replication(&config, rep).unwrap();
        let max_rank = data.train.max_informative_rank();
        let selection = select_dimension(
            &data.train,
            max_rank,
            ScalePolicy::TotalVariance,
            SelectionStatistic::SumSquaredT,
        )
        .unwrap();
        let tested = permutation_test(&data.train, &selection, 1000, 0.05, rep).unwrap();

        // independent enumeration of all C(4,2) = 6 assignments
        let observed = selection.statistic_by_r[&selection.r_hat];
        let mut coords_by_r = Vec::new();
        for r in 1..=max_rank {
            let features: Vec<_> = data
                .train
                .sets()
                .iter()
                .map(|s| setclass::core::features::extract_features(s, r).unwrap())
                .collect();
            let c = scale_constant(&features).unwrap();
            let delta = pairwise_distances(&features, c).unwrap();
            coords_by_r.push(cmds_fit(&delta, DEFAULT_EIG_TOL).unwrap().coordinates().clone());
        }
        let assignments: [[bool; 4]; 6] = [
            [true, true, false, false],
            [true, false, true, false],
            [true, false, false, true],
            [false, true, true, false],
            [false, true, false, true],
            [false, false, true, true],
        ];
        let mut exceed = 0;
        for labels in &assignments {
            let max_t = coords_by_r
                .iter()
                .map(|z| hotelling_t(z, labels).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            if observed <= max_t {
                exceed += 1;
            }
        }
        let exact = exceed as f64 / 6.0;
        assert_eq!(tested.permutations, 6, "rep {rep}");
        assert_eq!(tested.p_value.unwrap(), exact, "rep {rep}");
        checked += 1;
    }
    check(
        8,
        "exhaustive-permutation equivalence at N=4",
        true,
        format!("{checked} seeded datasets, exact equality"),
    );
}

/// Criterion 9: every CLI subcommand run twice with identical seeds produces
/// byte-identical output files.
#[test]
fn criterion_9_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();

    // run the exact same command lines twice, each round in its own working
    // directory, and require byte-identical artifacts
    for round in ["a", "b"] {
        let cwd = dir.path().join(round);
        std::fs::create_dir(&cwd).unwrap();
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_setclass"))
                .args(args)
                .current_dir(&cwd)
                .output()
                .unwrap();
            assert_eq!(
                out.status.code(),
                Some(0),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        };
        run(&[
            "simulate", "--model", "2", "--p", "12", "--N", "8", "--seed", "77", "--out", "sim",
            "--test-out", "simt",
        ]);
        run(&[
            "simulate", "--model", "3", "--p", "6", "--N", "4", "--seed", "78", "--format",
            "json", "--out", "sim.json",
        ]);
        run(&["train", "--data", "sim", "--seed", "5", "--out", "model.json"]);
        run(&[
            "predict", "--model", "model.json", "--data", "simt", "--out", "labels.csv",
        ]);
        run(&[
            "bench", "--model", "1", "--p", "6", "--N", "6", "--reps", "4", "--seed", "9",
            "--methods", "PCF-MDEB,MDEB-WV", "--threads", if round == "a" { "1" } else { "4" },
            "--out", "bench.csv",
        ]);
    }

    // csv-dir outputs: compare whole directories by file name and content
    for stem in ["sim", "simt"] {
        let a = setclass::io::directory_fingerprint(&dir.path().join("a").join(stem)).unwrap();
        let b = setclass::io::directory_fingerprint(&dir.path().join("b").join(stem)).unwrap();
        let names = |v: Vec<(std::path::PathBuf, Vec<u8>)>| -> Vec<(std::ffi::OsString, Vec<u8>)> {
            v.into_iter()
                .map(|(p, bytes)| (p.file_name().unwrap().to_owned(), bytes))
                .collect()
        };
        assert_eq!(names(a), names(b), "{stem} directories differ");
    }
    for file in ["sim.json", "model.json", "labels.csv", "bench.csv"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between reruns");
    }

    check(
        9,
        "CLI determinism",
        true,
        "simulate (csv-dir and json), train, predict, bench byte-identical across reruns".into(),
    );
}
