//! Synthetic binary-classification generators (Settings 1-4), symmetric
//! label-noise injection, and matched clean test sets.
//!
//! All generators are pure functions of their seed. Class labels are 1 for
//! the negative class and 2 for the positive class; generated datasets carry
//! an all-false noise mask until noise is injected.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// How to read the second parameter of a normal law in the Setting 4 table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VarianceConvention {
    /// N(mu, v) means variance v.
    #[default]
    Variance,
    /// N(mu, s) means standard deviation s.
    StdDev,
}

/// Which synthetic setting to generate, at what size, from what seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    /// Setting id in 1..=4.
    pub setting_id: u8,
    /// Total number of observations.
    pub n: usize,
    pub seed: u64,
    /// Disk radius for Setting 3.
    pub circle_radius: f64,
    /// Parameter convention for Setting 4.
    pub variance_convention: VarianceConvention,
}

impl SettingSpec {
    pub fn new(setting_id: u8, n: usize, seed: u64) -> Result<Self> {
        if !(1..=4).contains(&setting_id) {
            return Err(Error::InvalidSettingId(setting_id));
        }
        if n < 2 {
            return Err(Error::InvalidSettingSpec(format!(
                "n must be at least 2, got {n}"
            )));
        }
        Ok(SettingSpec {
            setting_id,
            n,
            seed,
            circle_radius: 1.0,
            variance_convention: VarianceConvention::Variance,
        })
    }

    /// negative:positive class ratio for this setting.
    fn class_ratio(&self) -> (usize, usize) {
        match self.setting_id {
            1 | 2 => (1, 1),
            3 => (1, 2),
            4 => (3, 7),
            _ => unreachable!("validated id"),
        }
    }

    /// Exact class counts: the positive share is rounded down and the
    /// negative class takes the remainder.
    pub fn class_counts(&self) -> (usize, usize) {
        let (neg, pos) = self.class_ratio();
        let n_pos = self.n * pos / (neg + pos);
        (self.n - n_pos, n_pos)
    }
}

/// Symmetric label-noise parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Fraction of labels to flip, in [0, 0.5). The clean sub-population
    /// must stay the majority, which is what bounds the rate below one half.
    pub rate: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&rate) {
            return Err(Error::NoiseRateOutOfRange(rate));
        }
        Ok(NoiseSpec { rate, seed })
    }
}

/// Cholesky factor of the shared 3x3 covariance with 2 on the diagonal and
/// -1 on the first off-diagonals.
#[allow(clippy::needless_range_loop)]
fn tridiagonal_cholesky() -> [[f64; 3]; 3] {
    let sigma = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
    let mut l = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = sigma[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    l
}

fn gaussian_vector(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| StandardNormal.sample(rng)).collect()
}

/// mean + L z for the tridiagonal covariance.
fn correlated_gaussian(rng: &mut ChaCha8Rng, chol: &[[f64; 3]; 3], mean: f64) -> Vec<f64> {
    let z = gaussian_vector(rng, 3);
    (0..3)
        .map(|i| mean + (0..=i).map(|k| chol[i][k] * z[k]).sum::<f64>())
        .collect()
}

/// Multivariate t with 4 degrees of freedom: a correlated Gaussian scaled by
/// sqrt(nu / chi^2_nu).
fn correlated_student_t(rng: &mut ChaCha8Rng, chol: &[[f64; 3]; 3], mean: f64) -> Vec<f64> {
    const NU: usize = 4;
    let z = gaussian_vector(rng, 3);
    let chi2: f64 = (0..NU)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            g * g
        })
        .sum();
    let scale = (NU as f64 / chi2).sqrt();
    (0..3)
        .map(|i| mean + scale * (0..=i).map(|k| chol[i][k] * z[k]).sum::<f64>())
        .collect()
}

/// Uniform draw from a disk.
fn disk_point(rng: &mut ChaCha8Rng, center: (f64, f64), radius: f64) -> Vec<f64> {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    vec![center.0 + r * theta.cos(), center.1 + r * theta.sin()]
}

/// Generates a clean dataset for the given setting. The noise mask is
/// attached and all-false.
pub fn generate_setting(spec: &SettingSpec) -> Result<Dataset> {
    if !(1..=4).contains(&spec.setting_id) {
        return Err(Error::InvalidSettingId(spec.setting_id));
    }
    if spec.n < 2 {
        return Err(Error::InvalidSettingSpec(format!(
            "n must be at least 2, got {}",
            spec.n
        )));
    }
    if spec.setting_id == 3 && !(spec.circle_radius > 0.0 && spec.circle_radius.is_finite()) {
        return Err(Error::InvalidSettingSpec(format!(
            "circle_radius must be positive, got {}",
            spec.circle_radius
        )));
    }
    let (n_neg, n_pos) = spec.class_counts();
    let mut rng = rng_from_seed(derive_seed(
        spec.seed,
        "simgen",
        &[u64::from(spec.setting_id)],
    ));
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.n);
    let mut labels: Vec<u32> = Vec::with_capacity(spec.n);

    match spec.setting_id {
        1 => {
            let chol = tridiagonal_cholesky();
            for _ in 0..n_neg {
                rows.push(correlated_gaussian(&mut rng, &chol, 0.0));
                labels.push(1);
            }
            for _ in 0..n_pos {
                rows.push(correlated_gaussian(&mut rng, &chol, 1.0));
                labels.push(2);
            }
        }
        2 => {
            let chol = tridiagonal_cholesky();
            for _ in 0..n_neg {
                rows.push(correlated_student_t(&mut rng, &chol, 0.0));
                labels.push(1);
            }
            for _ in 0..n_pos {
                rows.push(correlated_student_t(&mut rng, &chol, 1.0));
                labels.push(2);
            }
        }
        3 => {
            let r = spec.circle_radius;
            for _ in 0..n_neg {
                let center = if rng.random::<bool>() {
                    (0.0, 0.0)
                } else {
                    (2.0, 2.0)
                };
                rows.push(disk_point(&mut rng, center, r));
                labels.push(1);
            }
            for _ in 0..n_pos {
                rows.push(disk_point(&mut rng, (1.0, 1.0), r));
                labels.push(2);
            }
        }
        4 => {
            let sd = |second: f64| match spec.variance_convention {
                VarianceConvention::Variance => second.sqrt(),
                VarianceConvention::StdDev => second,
            };
            // (x1 mean, x1 sd, x2 mean, x2 sd) per class.
            let neg = (-1.0, sd(1.0), 1.0, sd(1.0));
            let pos = (1.0, sd(0.5), -1.0, sd(0.5));
            let mut draw = |params: (f64, f64, f64, f64)| {
                let mut row = Vec::with_capacity(10);
                let g1: f64 = StandardNormal.sample(&mut rng);
                let g2: f64 = StandardNormal.sample(&mut rng);
                row.push(params.0 + params.1 * g1);
                row.push(params.2 + params.3 * g2);
                for _ in 2..10 {
                    row.push(StandardNormal.sample(&mut rng));
                }
                row
            };
            for _ in 0..n_neg {
                rows.push(draw(neg));
                labels.push(1);
            }
            for _ in 0..n_pos {
                rows.push(draw(pos));
                labels.push(2);
            }
        }
        _ => unreachable!(),
    }

    let n = rows.len();
    Dataset::from_rows(rows, labels)?.with_noise_mask(vec![false; n])
}

/// Flips exactly `round(rate * n)` labels, chosen uniformly without
/// replacement, and marks exactly those observations in the noise mask.
/// Features are untouched. Binary labels flip to the other class; with more
/// classes the replacement is a uniformly random different class.
pub fn inject_symmetric_noise(d: &Dataset, spec: &NoiseSpec) -> Result<Dataset> {
    if !(0.0..0.5).contains(&spec.rate) {
        return Err(Error::NoiseRateOutOfRange(spec.rate));
    }
    let n = d.n_rows();
    let n_flips = (spec.rate * n as f64).round() as usize;
    let mut rng = rng_from_seed(derive_seed(spec.seed, "noise", &[]));
    // Partial Fisher-Yates: the first n_flips entries are the flip targets.
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n_flips {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let k = d.n_classes();
    let mut labels = d.labels().to_vec();
    let mut mask = vec![false; n];
    for &i in &order[..n_flips] {
        let old = labels[i];
        let new = if k == 2 {
            3 - old
        } else {
            // Uniform over the other k-1 classes.
            let offset = rng.random_range(1..k);
            (old - 1 + offset) % k + 1
        };
        labels[i] = new;
        mask[i] = true;
    }
    d.replace_labels(labels).with_noise_mask(mask)
}

/// A standalone noise mask with exactly `round(rate * n)` noisy positions
/// chosen uniformly, for driving the verification lab without a dataset.
pub fn random_mask(n: usize, rate: f64, seed: u64) -> Result<Vec<bool>> {
    if !(0.0..0.5).contains(&rate) {
        return Err(Error::NoiseRateOutOfRange(rate));
    }
    let n_noisy = (rate * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(derive_seed(seed, "mask", &[]));
    for i in 0..n_noisy {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut mask = vec![false; n];
    for &i in &order[..n_noisy] {
        mask[i] = true;
    }
    Ok(mask)
}

/// A clean test set from the same generator, drawn in an independent seed
/// domain so train and test never share randomness.
pub fn make_test_set(spec: &SettingSpec, n_test: usize) -> Result<Dataset> {
    let test_spec = SettingSpec {
        n: n_test,
        seed: derive_seed(spec.seed, "test", &[]),
        ..spec.clone()
    };
    generate_setting(&test_spec)
}
