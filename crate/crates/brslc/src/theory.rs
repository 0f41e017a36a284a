//! Desk-scale verification of the distributional claims behind the cleaner:
//! per-observation mean noise levels, their independent coupling, the exact
//! two-component oracle laws, the theoretical mean gap, a pairwise-covariance
//! (PQD) check, and the no-intercept linear fit diagnostic.
//!
//! Everything here needs a ground-truth noise mask, so it only applies to
//! simulated data. None of it is consulted by the cleaning loop.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::dataset::IndexSet;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, StreamKey};
use crate::sampling::{
    coupling_stream_key, draw_subset_excluding_keyed, InclusionCounts, SamplingConfig, SubsetDraw,
    SUPPLEMENT_CAP_FACTOR,
};

/// Group means of per-observation statistics, split by the noise mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupMeans {
    /// Mean over observations with mask = false.
    pub clean: f64,
    /// Mean over observations with mask = true.
    pub noisy: f64,
}

impl GroupMeans {
    /// noisy mean minus clean mean.
    pub fn gap(&self) -> f64 {
        self.noisy - self.clean
    }
}

/// Per-observation mean noise levels plus their group means.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLevelStats {
    /// One entry per observation, each in [0, 1].
    pub tilde_l: Vec<f64>,
    /// Defined only when both groups are nonempty.
    pub group_means: Option<GroupMeans>,
}

fn group_means(values: &[f64], mask: &[bool]) -> Option<GroupMeans> {
    let mut sum = [0.0f64; 2];
    let mut count = [0usize; 2];
    for (&v, &m) in values.iter().zip(mask) {
        let g = usize::from(m);
        sum[g] += v;
        count[g] += 1;
    }
    if count[0] == 0 || count[1] == 0 {
        return None;
    }
    Some(GroupMeans {
        clean: sum[0] / count[0] as f64,
        noisy: sum[1] / count[1] as f64,
    })
}

/// Label noise level of a subset: the fraction of its members that are noisy.
pub fn label_noise_level(members: &IndexSet, mask: &[bool]) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(max) = members.max() {
        if max >= mask.len() {
            return Err(Error::IndexOutOfRange {
                index: max,
                size: mask.len(),
            });
        }
    }
    let noisy = members.iter().filter(|&i| mask[i]).count();
    Ok(noisy as f64 / members.len() as f64)
}

/// Mean noise level per observation: for each `z`, the average of the noise
/// levels of all drawn subsets containing `z`.
///
/// `counts` must be the inclusion counts of exactly the draws passed in, with
/// every count positive (arrange coverage upstream, e.g. via
/// [`crate::sampling::covering_counts`]).
pub fn empirical_mean_noise_levels(
    draws: impl IntoIterator<Item = SubsetDraw>,
    mask: &[bool],
    counts: &InclusionCounts,
) -> Result<NoiseLevelStats> {
    let n = mask.len();
    if counts.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: counts.len(),
        });
    }
    if let Some(z) = counts.as_slice().iter().position(|&c| c == 0) {
        return Err(Error::UncoveredObservation(z));
    }
    let mut sums = vec![0.0f64; n];
    for draw in draws {
        if draw.members.is_empty() {
            continue;
        }
        let level = label_noise_level(&draw.members, mask)?;
        for i in draw.members.iter() {
            sums[i] += level;
        }
    }
    let tilde_l: Vec<f64> = sums
        .iter()
        .zip(counts.as_slice())
        .map(|(&s, &c)| s / c as f64)
        .collect();
    let group_means = group_means(&tilde_l, mask);
    Ok(NoiseLevelStats {
        tilde_l,
        group_means,
    })
}

/// Independent coupling of the mean noise levels.
///
/// For each observation `z`, a per-observation inclusion count is drawn from
/// the Bin(M, q) inclusion law (conditioned positive, mirroring the coverage
/// guarantee on the empirical side) and that many fresh exclusion subsets
/// `B' ⊆ D \ {z}` are averaged through `l(B' ∪ {z})`. Entries are independent
/// across observations by construction.
pub fn coupled_mean_noise_levels(
    n: usize,
    mask: &[bool],
    cfg: &SamplingConfig,
) -> Result<NoiseLevelStats> {
    cfg.validate()?;
    if n < 2 {
        return Err(Error::DatasetTooSmall { n, need: 2 });
    }
    if mask.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: mask.len(),
        });
    }
    let key = coupling_stream_key(cfg);
    let count_law = Binomial::new(cfg.n_subsets, cfg.q)
        .map_err(|e| Error::InvalidSamplingConfig(e.to_string()))?;
    let tilde_l: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|z| -> Result<f64> {
            let count = positive_inclusion_count(&key, z, &count_law)?;
            let mut sum = 0.0f64;
            for m in 1..=count {
                let members = draw_subset_excluding_keyed(n, z, cfg.q, &key, m);
                let noisy = members.iter().filter(|&i| mask[i]).count() + usize::from(mask[z]);
                sum += noisy as f64 / (members.len() + 1) as f64;
            }
            Ok(sum / count as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let group_means = group_means(&tilde_l, mask);
    Ok(NoiseLevelStats {
        tilde_l,
        group_means,
    })
}

/// Draws the per-observation count from Bin(M, q), retrying (at fresh
/// coordinates) until positive. Ordinal 0 is reserved for count draws; the
/// exclusion subsets themselves use ordinals 1.. in the same domain.
fn positive_inclusion_count(key: &StreamKey, z: usize, law: &Binomial) -> Result<u64> {
    for attempt in 0..SUPPLEMENT_CAP_FACTOR * 100 {
        let mut rng = key.rng_at(&[z as u64, 0, attempt]);
        let count = law.sample(&mut rng);
        if count > 0 {
            return Ok(count);
        }
    }
    Err(Error::UncoveredObservation(z))
}

/// Parameters of the exact two-component noise-level laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    /// Number of clean observations N1 (at least 1).
    pub n_clean: usize,
    /// Number of noisy observations N2 (at least 1).
    pub n_noisy: usize,
    /// Inclusion probability q in (0, 1).
    pub q: f64,
}

impl OracleParams {
    pub fn new(n_clean: usize, n_noisy: usize, q: f64) -> Result<Self> {
        if n_clean < 1 || n_noisy < 1 || n_clean + n_noisy < 2 {
            return Err(Error::InvalidOracleParams(format!(
                "group sizes must be at least 1 each, got ({n_clean}, {n_noisy})"
            )));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidOracleParams(format!(
                "q must be in (0, 1), got {q}"
            )));
        }
        Ok(OracleParams {
            n_clean,
            n_noisy,
            q,
        })
    }
}

/// Which sub-population an observation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseGroup {
    Clean,
    Noisy,
}

/// I.i.d. draws from the exact per-subset noise-level law for one group.
///
/// With `T1 ~ Bin(N1-1, q)`, `T2 ~ Bin(N2-1, q)`, and `xi ~ Be(q)` mutually
/// independent, a clean observation sees `(T2 + xi) / (T1 + T2 + xi + 1)` and
/// a noisy one sees `(T2 + 1) / (T1 + T2 + xi + 1)`.
pub fn oracle_sample(
    params: &OracleParams,
    group: NoiseGroup,
    n_draws: usize,
    seed: u64,
) -> Vec<f64> {
    let t1_law = Binomial::new(params.n_clean as u64 - 1, params.q).expect("validated q");
    let t2_law = Binomial::new(params.n_noisy as u64 - 1, params.q).expect("validated q");
    let mut rng = rng_from_seed(seed);
    (0..n_draws)
        .map(|_| {
            let t1 = t1_law.sample(&mut rng) as f64;
            let t2 = t2_law.sample(&mut rng) as f64;
            let xi = f64::from(rng.random::<f64>() < params.q);
            let denom = t1 + t2 + xi + 1.0;
            match group {
                NoiseGroup::Clean => (t2 + xi) / denom,
                NoiseGroup::Noisy => (t2 + 1.0) / denom,
            }
        })
        .collect()
}

/// The closed-form mean gap between the noisy and clean components,
/// `(1 - q) / ((n - 1) q + 1)`.
pub fn theoretical_mean_gap(n: usize, q: f64) -> f64 {
    (1.0 - q) / ((n as f64 - 1.0) * q + 1.0)
}

/// Summary of the pairwise-covariance check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PqdSummary {
    /// Smallest sampled pairwise covariance.
    pub min_cov: f64,
    /// Fraction of sampled pairs whose covariance estimate lies below minus
    /// three of its own Monte-Carlo standard errors.
    pub frac_negative: f64,
    pub n_pairs: usize,
}

/// Estimates same-group pairwise covariances of the mean noise levels across
/// independent replications.
///
/// Positive quadrant dependence implies every such covariance is nonnegative;
/// the check is one-sided with a per-pair Monte-Carlo tolerance. At least 30
/// replications (outer Monte-Carlo over sampling seeds) are required.
pub fn pqd_covariance_check(
    replications: &[Vec<f64>],
    mask: &[bool],
    n_pairs: usize,
    seed: u64,
) -> Result<PqdSummary> {
    let r = replications.len();
    if r < 30 {
        return Err(Error::InsufficientReplications { need: 30, got: r });
    }
    let n = mask.len();
    for rep in replications {
        if rep.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: rep.len(),
            });
        }
    }
    let clean: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
    let noisy: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    if clean.len() < 2 {
        return Err(Error::GroupTooSmall("clean"));
    }
    if noisy.len() < 2 {
        return Err(Error::GroupTooSmall("noisy"));
    }

    let mut rng = rng_from_seed(seed);
    let mut min_cov = f64::INFINITY;
    let mut negative = 0usize;
    for _ in 0..n_pairs {
        let group = if rng.random::<bool>() { &clean } else { &noisy };
        let a = group[rng.random_range(0..group.len())];
        let b = loop {
            let b = group[rng.random_range(0..group.len())];
            if b != a {
                break b;
            }
        };
        let xs: Vec<f64> = replications.iter().map(|rep| rep[a]).collect();
        let ys: Vec<f64> = replications.iter().map(|rep| rep[b]).collect();
        let (cov, se) = covariance_with_se(&xs, &ys);
        min_cov = min_cov.min(cov);
        if cov < -3.0 * se {
            negative += 1;
        }
    }
    Ok(PqdSummary {
        min_cov,
        frac_negative: negative as f64 / n_pairs as f64,
        n_pairs,
    })
}

/// Sample covariance plus the large-sample standard error of that estimate,
/// `sqrt((var_x var_y + cov^2) / R)`.
fn covariance_with_se(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / r;
    let my = ys.iter().sum::<f64>() / r;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov /= r - 1.0;
    vx /= r - 1.0;
    vy /= r - 1.0;
    let se = ((vx * vy + cov * cov) / r).sqrt();
    (cov, se)
}

/// Mean absolute test-function discrepancy between a sequence and its
/// coupling: `(1/N) |sum g(l) - g(l')|`.
pub fn coupling_discrepancy(
    tilde_l: &[f64],
    tilde_l_prime: &[f64],
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    if tilde_l.len() != tilde_l_prime.len() {
        return Err(Error::LengthMismatch {
            expected: tilde_l.len(),
            got: tilde_l_prime.len(),
        });
    }
    if tilde_l.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = tilde_l
        .iter()
        .zip(tilde_l_prime)
        .map(|(&a, &b)| g(a) - g(b))
        .sum();
    Ok(sum.abs() / tilde_l.len() as f64)
}

/// A named test function with a bounded derivative on [0, 1].
pub type TestFunction = (&'static str, fn(f64) -> f64);

/// Bounded-derivative test functions on [0, 1] for coupling checks.
pub fn test_functions() -> [TestFunction; 3] {
    [
        ("identity", |x| x),
        ("square", |x| x * x),
        ("sine", |x| (PI * x).sin()),
    ]
}

/// A least-squares fit of `tilde_l ~ beta * tilde_e` with no intercept.
/// Diagnostic only; the cleaning loop never uses it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub beta: f64,
    pub residual_rms: f64,
}

pub fn fit_linear_no_intercept(tilde_e: &[f64], tilde_l: &[f64]) -> Result<LinearFit> {
    if tilde_e.len() != tilde_l.len() {
        return Err(Error::LengthMismatch {
            expected: tilde_e.len(),
            got: tilde_l.len(),
        });
    }
    if tilde_e.len() < 2 {
        return Err(Error::TooFewValues {
            need: 2,
            got: tilde_e.len(),
        });
    }
    let sum_ee: f64 = tilde_e.iter().map(|&e| e * e).sum();
    if sum_ee == 0.0 {
        return Err(Error::AllZeroPredictor);
    }
    let sum_el: f64 = tilde_e.iter().zip(tilde_l).map(|(&e, &l)| e * l).sum();
    let beta = sum_el / sum_ee;
    let ss_res: f64 = tilde_e
        .iter()
        .zip(tilde_l)
        .map(|(&e, &l)| {
            let r = l - beta * e;
            r * r
        })
        .sum();
    Ok(LinearFit {
        beta,
        residual_rms: (ss_res / tilde_e.len() as f64).sqrt(),
    })
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `n_bins + 1` edges, ascending.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins values into `n_bins` equal-width bins over `range` (defaults to the
/// data range). Values outside the range are dropped; a value equal to the
/// upper edge lands in the last bin. A zero-width range is widened by one so
/// all values fall into the first bin.
pub fn histogram(values: &[f64], n_bins: usize, range: Option<(f64, f64)>) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::NoBins);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(pos));
    }
    let (lo, mut hi) = match range {
        Some((lo, hi)) => (lo, hi),
        None => {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let mut bin = ((v - lo) / width) as usize;
        if bin >= n_bins {
            bin = n_bins - 1;
        }
        counts[bin] += 1;
    }
    let edges = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    Ok(Histogram { edges, counts })
}

/// Writes a histogram as TSV with columns `bin_left`, `bin_right`, `count`.
pub fn write_histogram_tsv(h: &Histogram, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "bin_left\tbin_right\tcount")?;
    for (i, &c) in h.counts.iter().enumerate() {
        writeln!(w, "{}\t{}\t{}", h.edges[i], h.edges[i + 1], c)?;
    }
    Ok(())
}
