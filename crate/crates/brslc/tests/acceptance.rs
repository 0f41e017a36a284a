//! Acceptance suite. Each criterion runs at its stated tolerance and prints
//! one pass/fail line (run with `--nocapture` to see the lines for passing
//! criteria). Heavy statistics reuse the library's seeded streams, so every
//! run is reproducible.

use std::time::Instant;

use brslc::classify::{error_rate, train_dataset, ClassifierSpec};
use brslc::clean::{brslc_clean, cleaning_metrics, estimate_cut_point, CleaningOutcome};
use brslc::dataset::{subset_view, Dataset};
use brslc::rng::{derive_seed, rng_from_seed};
use brslc::sampling::{covering_counts, draw_subsets_range, SamplingConfig};
use brslc::simgen::{
    generate_setting, inject_symmetric_noise, make_test_set, NoiseSpec, SettingSpec,
};
use brslc::theory::{
    coupled_mean_noise_levels, coupling_discrepancy, empirical_mean_noise_levels,
    theoretical_mean_gap, GroupMeans,
};
use rand::Rng;

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Mean noise levels for a fixed mask and sampling config, with coverage.
fn mean_noise_levels(mask: &[bool], cfg: &SamplingConfig) -> brslc::theory::NoiseLevelStats {
    let n = mask.len();
    let (last, counts) = covering_counts(n, cfg).expect("coverage");
    empirical_mean_noise_levels(draw_subsets_range(n, cfg, 1, last), mask, &counts)
        .expect("all covered")
}

// Criterion 1: with N = 1000 (800 clean / 200 noisy), q = 0.4, M = 2e5, the
// empirical group-mean gap of the mean noise levels lies within +-20%
// relative of (1 - q)/((N - 1)q + 1) ~ 0.0014978, at 5 fixed seeds, in at
// most two minutes per seed.
#[test]
fn criterion_1_mean_gap_reproduction() {
    let mask: Vec<bool> = (0..1000).map(|i| i >= 800).collect();
    let expected = theoretical_mean_gap(1000, 0.4);
    assert!((expected - 0.6 / 400.6).abs() < 1e-15);
    let mut lines = Vec::new();
    let mut all_ok = true;
    for seed in [1u64, 2, 3, 4, 5] {
        let start = Instant::now();
        let cfg = SamplingConfig::new(0.4, 200_000, seed).unwrap();
        let stats = mean_noise_levels(&mask, &cfg);
        let elapsed = start.elapsed();
        let gap = stats.group_means.expect("both groups present").gap();
        let rel = (gap - expected).abs() / expected;
        let ok = rel <= 0.20 && elapsed.as_secs() <= 120;
        all_ok &= ok;
        lines.push(format!(
            "seed {seed}: gap {gap:.7} rel_err {rel:.4} ({elapsed:.1?})"
        ));
    }
    println!(
        "acceptance 1 (mean-gap reproduction): {} [target {expected:.7} +-20%] {}",
        status(all_ok),
        lines.join("; ")
    );
    assert!(all_ok, "{}", lines.join("; "));
}

// Criterion 2: with N = 300, q = 0.4, M = 1e4, the coupled per-group means
// match the empirical per-group means within 3 combined Monte-Carlo standard
// errors (estimated by replication), and the identity-test-function
// discrepancy at M = 1e4 beats M = 1e3 in at least 8 of 10 paired seeds.
#[test]
fn criterion_2_coupling_consistency() {
    let n = 300;
    let mask: Vec<bool> = (0..n).map(|i| i >= 240).collect();
    let base_seed = 42u64;
    let cfg = SamplingConfig::new(0.4, 10_000, base_seed).unwrap();

    let emp = mean_noise_levels(&mask, &cfg).group_means.unwrap();
    let coup = coupled_mean_noise_levels(n, &mask, &cfg)
        .unwrap()
        .group_means
        .unwrap();

    // Replicated runs estimate the Monte-Carlo sd of each group mean. The
    // empirical side needs this: its entries share subsets, so a naive
    // within-run standard error would understate the run-to-run spread.
    let replicate = |r: u64| -> (GroupMeans, GroupMeans) {
        let rcfg = SamplingConfig {
            seed: derive_seed(base_seed, "se-rep", &[r]),
            ..cfg.clone()
        };
        let e = mean_noise_levels(&mask, &rcfg).group_means.unwrap();
        let c = coupled_mean_noise_levels(n, &mask, &rcfg)
            .unwrap()
            .group_means
            .unwrap();
        (e, c)
    };
    let reps: Vec<(GroupMeans, GroupMeans)> = (0..10).map(replicate).collect();
    let sd = |values: Vec<f64>| {
        let m = values.iter().sum::<f64>() / values.len() as f64;
        (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)).sqrt()
    };
    let combined_clean = (sd(reps.iter().map(|(e, _)| e.clean).collect()).powi(2)
        + sd(reps.iter().map(|(_, c)| c.clean).collect()).powi(2))
    .sqrt();
    let combined_noisy = (sd(reps.iter().map(|(e, _)| e.noisy).collect()).powi(2)
        + sd(reps.iter().map(|(_, c)| c.noisy).collect()).powi(2))
    .sqrt();
    let clean_ok = (emp.clean - coup.clean).abs() <= 3.0 * combined_clean;
    let noisy_ok = (emp.noisy - coup.noisy).abs() <= 3.0 * combined_noisy;

    let mut wins = 0;
    for s in 1..=10u64 {
        let mut discrepancy = [0.0f64; 2];
        for (slot, m) in [(0usize, 1_000u64), (1, 10_000)] {
            let pair_cfg = SamplingConfig::new(0.4, m, derive_seed(77, "pair", &[s])).unwrap();
            let emp = mean_noise_levels(&mask, &pair_cfg);
            let coup = coupled_mean_noise_levels(n, &mask, &pair_cfg).unwrap();
            discrepancy[slot] = coupling_discrepancy(&emp.tilde_l, &coup.tilde_l, |x| x).unwrap();
        }
        if discrepancy[1] < discrepancy[0] {
            wins += 1;
        }
    }
    let wins_ok = wins >= 8;

    let all_ok = clean_ok && noisy_ok && wins_ok;
    println!(
        "acceptance 2 (coupling consistency): {} [clean diff {:.2e} <= {:.2e}: {}; noisy diff {:.2e} <= {:.2e}: {}; M-scaling wins {wins}/10 >= 8: {}]",
        status(all_ok),
        (emp.clean - coup.clean).abs(),
        3.0 * combined_clean,
        status(clean_ok),
        (emp.noisy - coup.noisy).abs(),
        3.0 * combined_noisy,
        status(noisy_ok),
        status(wins_ok),
    );
    assert!(all_ok);
}

/// The cut-point objective, recomputed from scratch through the raw mass and
/// count ratios (a route independent of the implementation's conditional
/// means).
fn oracle_objective(values: &[f64], c: f64) -> f64 {
    let n_low = values.iter().filter(|&&x| x < c).count();
    let n_up = values.len() - n_low;
    let s_low: f64 = values.iter().filter(|&&x| x < c).sum();
    let s_up: f64 = values.iter().filter(|&&x| x >= c).sum();
    let mass_ratio = (s_low - n_low as f64 * c) / (n_up as f64 * c - s_up);
    (mass_ratio / (n_low as f64 / n_up as f64) - 1.0).abs()
}

/// Brute-force argmin over a uniform grid of interior thresholds.
fn oracle_grid_argmin(values: &[f64], points: u32) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let step = (hi - lo) / f64::from(points + 1);
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 1..=points {
        let c = lo + step * f64::from(i);
        let objective = oracle_objective(values, c);
        if objective < best.1 {
            best = (c, objective);
        }
    }
    best
}

// Criterion 3: on 100 random vectors (lengths 4-50, values in [0, 1]) the
// estimator agrees with a 1e5-point uniform-grid brute force. The objective
// can attain its minimum at several thresholds, so agreement means the same
// location within one candidate-grid step, or an objective value within the
// candidate grid's imbalance resolution (0.02) of the grid's: both are then
// members of the same argmin set. The analytic cases are checked to 1e-3.
#[test]
fn criterion_3_cut_point_oracle_equivalence() {
    let mut rng = rng_from_seed(31);
    let mut location_matches = 0;
    let mut all_ok = true;
    for _ in 0..100 {
        let len = rng.random_range(4..=50usize);
        let values: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let cut = estimate_cut_point(&values).unwrap();
        if cut.degenerate {
            continue;
        }
        let (grid_c, grid_obj) = oracle_grid_argmin(&values, 100_000);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let candidate_step = (hi - lo) / 513.0;
        let same_location = (cut.e_star - grid_c).abs() <= candidate_step * 1.000001;
        let both_balanced = oracle_objective(&values, cut.e_star) <= grid_obj + 0.02;
        if same_location {
            location_matches += 1;
        }
        if !(same_location || both_balanced) {
            all_ok = false;
        }
        assert!(cut.e_star > lo && cut.e_star < hi, "e* strictly inside");
    }

    let balanced_pair = estimate_cut_point(&[0.0, 0.0, 1.0, 1.0]).unwrap();
    let pair_ok = (balanced_pair.e_star - 0.5).abs() <= 1e-3;
    let three_one = estimate_cut_point(&[0.1, 0.1, 0.1, 0.7]).unwrap();
    let three_ok = (three_one.e_star - 0.4).abs() <= 1e-3;
    all_ok &= pair_ok && three_ok;

    println!(
        "acceptance 3 (cut-point oracle equivalence): {} [100 vectors: {location_matches} same-location, rest equal-balance; [0,0,1,1] -> {:.6}: {}; [.1,.1,.1,.7] -> {:.6}: {}]",
        status(all_ok),
        balanced_pair.e_star,
        status(pair_ok),
        three_one.e_star,
        status(three_ok),
    );
    assert!(all_ok);
}

// Criterion 4: affine equivariance. For 50 random vectors and 10 random
// (a > 0, b) pairs, e*(a x + b) = a e*(x) + b within one candidate-grid step
// of the transformed data. This is the testable form of the method's
// independence from the linear-model slope.
#[test]
fn criterion_4_cut_point_equivariance() {
    let mut rng = rng_from_seed(47);
    let mut worst = 0.0f64;
    let mut all_ok = true;
    for _ in 0..50 {
        let len = rng.random_range(4..=50usize);
        let values: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        let base = estimate_cut_point(&values).unwrap();
        if base.degenerate {
            continue;
        }
        for _ in 0..10 {
            let a = 0.1 + 9.9 * rng.random::<f64>();
            let b = -5.0 + 10.0 * rng.random::<f64>();
            let transformed: Vec<f64> = values.iter().map(|&x| a * x + b).collect();
            let cut = estimate_cut_point(&transformed).unwrap();
            let expected = a * base.e_star + b;
            let lo = transformed.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = transformed
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let step = (hi - lo) / 513.0;
            let err = (cut.e_star - expected).abs() / step;
            worst = worst.max(err);
            if err > 1.000001 {
                all_ok = false;
            }
        }
    }
    println!(
        "acceptance 4 (cut-point equivariance): {} [worst deviation {worst:.2e} candidate-grid steps]",
        status(all_ok)
    );
    assert!(all_ok);
}

/// One synthetic cleaning run: Setting 1 at the given noise rate and sampling
/// parameters, 1-NN, k = 5 folds.
fn cleaning_run(seed: u64, noise_rate: f64, q: f64, m: u64) -> (Dataset, CleaningOutcome) {
    let spec = SettingSpec::new(1, 500, seed).unwrap();
    let clean = generate_setting(&spec).unwrap();
    let noise = NoiseSpec::new(noise_rate, derive_seed(seed, "noise-seed", &[])).unwrap();
    let noisy = inject_symmetric_noise(&clean, &noise).unwrap();
    let cfg = SamplingConfig::new(q, m, seed)
        .unwrap()
        .with_min_subset_size(5);
    let outcome = brslc_clean(&noisy, &ClassifierSpec::knn1(), &cfg, 5, 20).unwrap();
    (noisy, outcome)
}

// Criterion 5: end-to-end desk-scale cleaning. Setting 1, 20% noise,
// N = 500, 1-NN, q = 0.4, M = 2000, k = 5, averaged over 5 seeds:
// l_cleaned <= 6%, r_noise >= 70%, r_clean >= 80%, within 10 minutes.
//
// The r_clean band does not hold at these parameters: with q = 0.4 the
// subsets have ~200 members, each member shifts a subset's CV error by
// O(1/|B|), and the per-observation difficulty spread of 1-NN on this
// feature distribution is of the same size as the clean/noisy gap
// (measured separation d' ~ 1.1-1.6 however large M gets, whereas r_clean
// >= 80% needs d' >= ~1.7 even for an oracle threshold that stops after one
// iteration). The separation the method needs arrives with smaller subsets
// (see criteria 6-7, which run at q <= 0.05 and pass). The band is asserted
// as stated rather than retuned.
#[test]
fn criterion_5_end_to_end_cleaning() {
    let start = Instant::now();
    let mut sums = (0.0f64, 0.0f64, 0.0f64);
    for seed in [101u64, 202, 303, 404, 505] {
        let (_, outcome) = cleaning_run(seed, 0.2, 0.4, 2000);
        let metrics = outcome.report.metrics.expect("mask present");
        sums.0 += 100.0 * metrics.l_cleaned;
        sums.1 += metrics.r_noise.expect("noise injected");
        sums.2 += metrics.r_clean;
    }
    let (l_cleaned, r_noise, r_clean) = (sums.0 / 5.0, sums.1 / 5.0, sums.2 / 5.0);
    let elapsed = start.elapsed();
    let l_ok = l_cleaned <= 6.0;
    let noise_ok = r_noise >= 70.0;
    let clean_ok = r_clean >= 80.0;
    let time_ok = elapsed.as_secs() <= 600;
    println!(
        "acceptance 5 (end-to-end cleaning, q=0.4, M=2000): l_cleaned {l_cleaned:.2}% <= 6%: {}; r_noise {r_noise:.1}% >= 70%: {}; r_clean {r_clean:.1}% >= 80%: {}; runtime {elapsed:.1?} <= 600s: {}",
        status(l_ok),
        status(noise_ok),
        status(clean_ok),
        status(time_ok),
    );
    assert!(l_ok, "l_cleaned {l_cleaned:.2}% > 6%");
    assert!(noise_ok, "r_noise {r_noise:.1}% < 70%");
    assert!(time_ok, "runtime {elapsed:?} > 600s");
    assert!(
        clean_ok,
        "r_clean {r_clean:.1}% < 80%: not attainable at q = 0.4 (see comment above)"
    );
}

// Criterion 6: test-error improvement. Setting 1, 40% noise, N = 500, 1-NN,
// clean test set of 500: the mean test error after cleaning is at least 10
// percentage points below the noisy-training test error over 5 seeds. The
// criterion leaves the sampling parameters open; q = 0.05, M = 2e4 is the
// desk-scale configuration where the separation mechanism is strong.
#[test]
fn criterion_6_test_error_improvement() {
    let knn = ClassifierSpec::knn1();
    let mut noisy_sum = 0.0;
    let mut cleaned_sum = 0.0;
    for seed in [11u64, 22, 33, 44, 55] {
        let (noisy, outcome) = cleaning_run(seed, 0.4, 0.05, 20_000);
        let test = make_test_set(&SettingSpec::new(1, 500, seed).unwrap(), 500).unwrap();
        let model = train_dataset(&knn, &noisy).unwrap();
        noisy_sum += error_rate(&model, test.features(), test.n_cols(), test.labels()).unwrap();
        let cleaned_view = subset_view(&noisy, &outcome.report.cleaned).unwrap();
        let model = train_dataset(&knn, &cleaned_view).unwrap();
        cleaned_sum += error_rate(&model, test.features(), test.n_cols(), test.labels()).unwrap();
    }
    let improvement_pp = 100.0 * (noisy_sum - cleaned_sum) / 5.0;
    let ok = improvement_pp >= 10.0;
    println!(
        "acceptance 6 (test-error improvement): {} [noisy {:.3}, cleaned {:.3}, improvement {improvement_pp:.1}pp >= 10pp]",
        status(ok),
        noisy_sum / 5.0,
        cleaned_sum / 5.0,
    );
    assert!(ok);
}

// Criterion 7: stepwise purity trend on one fixed Setting-1/40%/N=500 seed.
// The noisy purity above the cut must be >= 0.70 at iteration 1 and >= 0.85
// at the final accepted iteration.
//
// Iteration 1 separates as intended (~0.78 here). The rising trend does
// not: each iteration removes the most conspicuous noise, so the survivors
// are exactly the flips the classifier's subset CV errors cannot see, and
// the above-cut purity of later iterations falls for every built-in
// classifier and sampling configuration tried (kNN for k in 1..25, trees of
// several shapes, q from 0.02 to 0.4, M up to 3.2e5). A rising trend needs a
// classifier whose per-observation difficulty spread collapses on cleaner
// data, which margin-based classifiers provide and the built-ins do not;
// the second clause is asserted as stated and fails.
#[test]
fn criterion_7_stepwise_purity_trend() {
    let (noisy, outcome) = cleaning_run(11, 0.4, 0.03, 53_333);
    let mask = noisy.noise_mask().unwrap();
    let purities: Vec<f64> = outcome
        .trace
        .iter()
        .map(|tr| {
            let above: Vec<usize> = tr
                .working
                .iter()
                .filter(|i| !tr.retained.contains(*i))
                .collect();
            above.iter().filter(|&&i| mask[i]).count() as f64 / above.len() as f64
        })
        .collect();
    assert!(!purities.is_empty(), "at least one accepted iteration");
    let first = purities[0];
    let last = *purities.last().unwrap();
    let first_ok = first >= 0.70;
    let last_ok = last >= 0.85;
    println!(
        "acceptance 7 (stepwise purity trend): iteration-1 purity {first:.3} >= 0.70: {}; final purity {last:.3} >= 0.85: {} [trajectory {:?}]",
        status(first_ok),
        status(last_ok),
        purities.iter().map(|p| (p * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
    );
    assert!(first_ok, "iteration-1 purity {first:.3} < 0.70");
    assert!(
        last_ok,
        "final purity {last:.3} < 0.85: declining trajectories are structural for the built-in classifiers (see comment above)"
    );
}

// Criterion 8: invariant suites. Bookkeeping identity, range invariants,
// strict shrinkage, strictly decreasing retained-set CV error, and bit-exact
// reruns. These hold regardless of how criteria 1-7's bands are tuned.
#[test]
fn criterion_8_invariant_suites() {
    // A moderate planted-noise instance.
    let (noisy, outcome) = cleaning_run(9, 0.2, 0.1, 800);

    // Bookkeeping: sum_i s_i equals sum over evaluated subsets of
    // e_cv(B) |B|, recomputed independently by replaying the draw stream of
    // iteration 1. Counts are integers and exact; float sums are compared at
    // 1e-9 relative.
    let working = brslc::dataset::IndexSet::full(noisy.n_rows());
    let view = subset_view(&noisy, &working).unwrap();
    let iter_cfg = SamplingConfig {
        seed: derive_seed(9, "iter", &[1]),
        ..SamplingConfig::new(0.1, 800, 9)
            .unwrap()
            .with_min_subset_size(5)
    };
    let obs =
        brslc::clean::aggregate_cv_errors(&view, &ClassifierSpec::knn1(), &iter_cfg, 5).unwrap();
    let fold_key = brslc::rng::StreamKey::new(iter_cfg.seed, "folds");
    let mut by_subset = 0.0f64;
    let mut replay_counts = vec![0u64; view.n_rows()];
    let total_draws = obs.n_subsets_used + obs.n_subsets_skipped;
    for m in 1..=total_draws {
        let draw = brslc::sampling::draw_subset(view.n_rows(), &iter_cfg, m);
        if draw.members.len() < 5 {
            continue;
        }
        let labels: Vec<u32> = draw.members.iter().map(|i| view.label(i)).collect();
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        let mut features = Vec::new();
        for i in draw.members.iter() {
            features.extend_from_slice(view.row(i));
            replay_counts[i] += 1;
        }
        let e = brslc::classify::kfold_cv_error(
            &ClassifierSpec::knn1(),
            &features,
            view.n_cols(),
            &labels,
            5,
            fold_key.seed_at(&[m]),
        )
        .unwrap();
        by_subset += e * draw.members.len() as f64;
    }
    let by_observation: f64 = obs.error_sums.iter().sum();
    let bookkeeping_ok = (by_observation - by_subset).abs() <= 1e-9 * by_subset.abs().max(1.0)
        && replay_counts == obs.inclusion_counts;

    // Range invariants.
    let tilde_e_ok = obs.tilde_e.iter().all(|&e| (0.0..=1.0).contains(&e));
    let mask: Vec<bool> = noisy.noise_mask().unwrap().to_vec();
    let cfg = SamplingConfig::new(0.4, 2_000, 5).unwrap();
    let stats = mean_noise_levels(&mask, &cfg);
    let coup = coupled_mean_noise_levels(mask.len(), &mask, &cfg).unwrap();
    let tilde_l_ok = stats.tilde_l.iter().all(|&v| (0.0..=1.0).contains(&v))
        && coup.tilde_l.iter().all(|&v| (0.0..=1.0).contains(&v));

    // Strict shrinkage and strictly decreasing retained-set CV error.
    let report = &outcome.report;
    let mut shrink_ok = !report.iterations.is_empty();
    for pair in outcome.trace.windows(2) {
        shrink_ok &= pair[1].working.len() < pair[0].working.len()
            && pair[1].working.is_subset_of(&pair[0].working);
    }
    for tr in &outcome.trace {
        shrink_ok &= tr.retained.is_subset_of(&tr.working);
    }
    shrink_ok &= report
        .cleaned
        .is_subset_of(&brslc::dataset::IndexSet::full(noisy.n_rows()));
    let mut decreasing_ok = true;
    for pair in report.iterations.windows(2) {
        decreasing_ok &= pair[1].cv_error_retained < pair[0].cv_error_retained;
    }

    // Determinism: a full rerun of the cleaning loop is bit-identical.
    let (_, rerun) = cleaning_run(9, 0.2, 0.1, 800);
    let mut deterministic_ok = rerun.report == outcome.report;
    for (a, b) in outcome.trace.iter().zip(&rerun.trace) {
        deterministic_ok &= a
            .tilde_e
            .iter()
            .zip(&b.tilde_e)
            .all(|(x, y)| x.to_bits() == y.to_bits());
    }
    // Metrics on the same run are consistent with a direct recomputation.
    let direct = cleaning_metrics(&report.cleaned, &mask).unwrap();
    deterministic_ok &= Some(direct) == report.metrics;

    let all_ok = bookkeeping_ok
        && tilde_e_ok
        && tilde_l_ok
        && shrink_ok
        && decreasing_ok
        && deterministic_ok;
    println!(
        "acceptance 8 (invariant suites): {} [bookkeeping: {}; ranges: {}; shrinkage: {}; decreasing cv: {}; determinism: {}]",
        status(all_ok),
        status(bookkeeping_ok),
        status(tilde_e_ok && tilde_l_ok),
        status(shrink_ok),
        status(decreasing_ok),
        status(deterministic_ok),
    );
    assert!(all_ok);
}
