//! The mean CV errors track the unobservable mean noise levels through an
//! approximate no-intercept linear relation. This is diagnostic only — the
//! cleaner never fits it — but it should tighten as the number of subsets
//! grows.

use brslc::classify::ClassifierSpec;
use brslc::clean::aggregate_cv_errors;
use brslc::rng::derive_seed;
use brslc::sampling::{covering_counts, draw_subsets_range, SamplingConfig};
use brslc::simgen::{generate_setting, inject_symmetric_noise, NoiseSpec, SettingSpec};
use brslc::theory::{empirical_mean_noise_levels, fit_linear_no_intercept, LinearFit};

fn fit_at(m: u64) -> LinearFit {
    let spec = SettingSpec::new(1, 200, 3).unwrap();
    let clean = generate_setting(&spec).unwrap();
    let noise = NoiseSpec::new(0.2, derive_seed(3, "noise-seed", &[])).unwrap();
    let noisy = inject_symmetric_noise(&clean, &noise).unwrap();
    let mask = noisy.noise_mask().unwrap();

    let cfg = SamplingConfig::new(0.1, m, 5)
        .unwrap()
        .with_min_subset_size(5);
    let obs = aggregate_cv_errors(&noisy, &ClassifierSpec::knn1(), &cfg, 5).unwrap();
    let (last, counts) = covering_counts(noisy.n_rows(), &cfg).unwrap();
    let stats = empirical_mean_noise_levels(
        draw_subsets_range(noisy.n_rows(), &cfg, 1, last),
        mask,
        &counts,
    )
    .unwrap();
    fit_linear_no_intercept(&obs.tilde_e, &stats.tilde_l).unwrap()
}

#[test]
fn residual_rms_shrinks_as_m_grows() {
    let coarse = fit_at(300);
    let fine = fit_at(3000);
    assert!(coarse.beta > 0.0 && fine.beta > 0.0);
    assert!(
        fine.residual_rms < coarse.residual_rms,
        "rms at M=3000 ({}) should be below rms at M=300 ({})",
        fine.residual_rms,
        coarse.residual_rms
    );
    // The relation explains most of the spread: residuals are small next to
    // the noise-level scale itself.
    let scale = 0.2; // the injected noise level sets the tilde_l scale
    assert!(fine.residual_rms < 0.25 * scale, "{}", fine.residual_rms);
}
