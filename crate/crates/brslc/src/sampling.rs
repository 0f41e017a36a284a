//! Seeded generation of Bernoulli random subsets and inclusion bookkeeping.
//!
//! A subset draw with ordinal `m` includes each observation independently with
//! probability `q`, using a generator keyed by `(seed, "subset", m)`. Draws
//! are pure functions of their coordinates, so any ordinal can be produced on
//! any worker and the full stream replays identically for a given config.
//! Exclusion draws (subsets of everything except one observation) live in a
//! separate `"coupling"` seed domain so the two streams are independent.

use rand::Rng;

use crate::dataset::IndexSet;
use crate::error::{Error, Result};
use crate::rng::StreamKey;

const DOMAIN_SUBSET: &str = "subset";
const DOMAIN_COUPLING: &str = "coupling";

/// How many supplementary subsets (as a multiple of `n_subsets`) may be drawn
/// to cover observations that no regular subset included.
pub const SUPPLEMENT_CAP_FACTOR: u64 = 10;

/// Configuration for one family of Bernoulli subset draws.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplingConfig {
    /// Inclusion probability q, strictly inside (0, 1).
    pub q: f64,
    /// Number of subsets M.
    pub n_subsets: u64,
    /// Seed for the whole draw family.
    pub seed: u64,
    /// Subsets smaller than this are skipped by cross-validation consumers
    /// (they still count toward M; nothing is redrawn in their place).
    pub min_subset_size: usize,
}

impl SamplingConfig {
    pub fn new(q: f64, n_subsets: u64, seed: u64) -> Result<Self> {
        let cfg = SamplingConfig {
            q,
            n_subsets,
            seed,
            min_subset_size: 2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_min_subset_size(mut self, min_subset_size: usize) -> Self {
        self.min_subset_size = min_subset_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidSamplingConfig(format!(
                "q must be in (0, 1), got {}",
                self.q
            )));
        }
        if self.n_subsets == 0 {
            return Err(Error::InvalidSamplingConfig(
                "n_subsets must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// One Bernoulli random subset: its ordinal in the stream and its members.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetDraw {
    pub ordinal: u64,
    pub members: IndexSet,
}

/// Per-observation inclusion counts over a collection of draws.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionCounts {
    counts: Vec<u64>,
}

impl InclusionCounts {
    pub fn zeros(n: usize) -> Self {
        InclusionCounts { counts: vec![0; n] }
    }

    pub fn record(&mut self, draw: &SubsetDraw) {
        for i in draw.members.iter() {
            self.counts[i] += 1;
        }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum over observations; equals the summed subset sizes exactly.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn all_positive(&self) -> bool {
        self.counts.iter().all(|&c| c > 0)
    }

    pub fn n_uncovered(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Draws the subset with the given ordinal: one Bernoulli(q) trial per
/// observation, in index order.
pub fn draw_subset(n: usize, cfg: &SamplingConfig, ordinal: u64) -> SubsetDraw {
    let key = StreamKey::new(cfg.seed, DOMAIN_SUBSET);
    draw_subset_keyed(n, cfg.q, &key, ordinal)
}

pub(crate) fn subset_stream_key(cfg: &SamplingConfig) -> StreamKey {
    StreamKey::new(cfg.seed, DOMAIN_SUBSET)
}

pub(crate) fn draw_subset_keyed(n: usize, q: f64, key: &StreamKey, ordinal: u64) -> SubsetDraw {
    let mut rng = key.rng_at(&[ordinal]);
    let mut members = Vec::with_capacity((n as f64 * q * 1.25) as usize + 4);
    for i in 0..n {
        if rng.random::<f64>() < q {
            members.push(i);
        }
    }
    SubsetDraw {
        ordinal,
        members: IndexSet::from_sorted_unchecked(members),
    }
}

/// The full stream of `cfg.n_subsets` draws, in ordinal order.
///
/// Empty subsets are yielded as-is; consumers filter what they cannot use.
pub fn draw_subsets<'a>(
    n: usize,
    cfg: &'a SamplingConfig,
) -> impl Iterator<Item = SubsetDraw> + 'a {
    draw_subsets_range(n, cfg, 1, cfg.n_subsets)
}

/// Draws for an arbitrary ordinal range (used for supplementary coverage).
pub fn draw_subsets_range<'a>(
    n: usize,
    cfg: &'a SamplingConfig,
    first: u64,
    last: u64,
) -> impl Iterator<Item = SubsetDraw> + 'a {
    let key = subset_stream_key(cfg);
    (first..=last).map(move |m| draw_subset_keyed(n, cfg.q, &key, m))
}

/// Counts how many draws contain each observation.
pub fn inclusion_counts(draws: impl IntoIterator<Item = SubsetDraw>, n: usize) -> InclusionCounts {
    let mut counts = InclusionCounts::zeros(n);
    for draw in draws {
        counts.record(&draw);
    }
    counts
}

/// Scans the regular stream and, if any observation is never included, keeps
/// drawing supplementary ordinals from the same law until every count is
/// positive. Returns the last ordinal used together with the counts over
/// ordinals `1..=last`. Fails once `SUPPLEMENT_CAP_FACTOR * n_subsets` extra
/// draws have not achieved coverage.
pub fn covering_counts(n: usize, cfg: &SamplingConfig) -> Result<(u64, InclusionCounts)> {
    cfg.validate()?;
    let mut counts = inclusion_counts(draw_subsets(n, cfg), n);
    let mut last = cfg.n_subsets;
    let cap = cfg.n_subsets.saturating_mul(SUPPLEMENT_CAP_FACTOR);
    let key = subset_stream_key(cfg);
    while !counts.all_positive() {
        if last - cfg.n_subsets >= cap {
            return Err(Error::CoverageCapExceeded {
                uncovered: counts.n_uncovered(),
                extra: last - cfg.n_subsets,
            });
        }
        last += 1;
        counts.record(&draw_subset_keyed(n, cfg.q, &key, last));
    }
    Ok((last, counts))
}

/// A Bernoulli(q) subset of all indices except `z`, deterministic in
/// `(cfg.seed, z, ordinal)` and independent of the regular subset stream.
pub fn draw_subset_excluding(n: usize, z: usize, cfg: &SamplingConfig, ordinal: u64) -> IndexSet {
    let key = StreamKey::new(cfg.seed, DOMAIN_COUPLING);
    draw_subset_excluding_keyed(n, z, cfg.q, &key, ordinal)
}

pub(crate) fn coupling_stream_key(cfg: &SamplingConfig) -> StreamKey {
    StreamKey::new(cfg.seed, DOMAIN_COUPLING)
}

pub(crate) fn draw_subset_excluding_keyed(
    n: usize,
    z: usize,
    q: f64,
    key: &StreamKey,
    ordinal: u64,
) -> IndexSet {
    debug_assert!(z < n);
    let mut rng = key.rng_at(&[z as u64, ordinal]);
    let mut members = Vec::with_capacity((n as f64 * q * 1.25) as usize + 4);
    for i in 0..n {
        if i == z {
            continue;
        }
        if rng.random::<f64>() < q {
            members.push(i);
        }
    }
    IndexSet::from_sorted_unchecked(members)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_replays_identically() {
        let cfg = SamplingConfig::new(0.4, 50, 99).unwrap();
        let a: Vec<_> = draw_subsets(30, &cfg).collect();
        let b: Vec<_> = draw_subsets(30, &cfg).collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
    }

    #[test]
    fn single_observation_high_q() {
        // With q = 0.999 the lone observation is included essentially always;
        // checked statistically over the stream, not per draw.
        let cfg = SamplingConfig::new(0.999, 3000, 1).unwrap();
        let nonempty = draw_subsets(1, &cfg)
            .filter(|d| d.members.as_slice() == [0])
            .count();
        assert!(nonempty >= 2980, "got {nonempty}");
    }

    #[test]
    fn mean_subset_size_matches_binomial() {
        // |B| ~ Bin(1000, 0.4): mean 400, per-draw sd ~ 15.49.
        let n = 1000;
        let m = 10_000u64;
        let cfg = SamplingConfig::new(0.4, m, 7).unwrap();
        let total: u64 = draw_subsets(n, &cfg).map(|d| d.members.len() as u64).sum();
        let mean = total as f64 / m as f64;
        let se = (1000.0 * 0.4 * 0.6f64).sqrt() / (m as f64).sqrt();
        assert!((mean - 400.0).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn counts_are_direct_tallies() {
        let draws = vec![
            SubsetDraw {
                ordinal: 1,
                members: IndexSet::new(vec![0, 1]),
            },
            SubsetDraw {
                ordinal: 2,
                members: IndexSet::new(vec![1]),
            },
        ];
        let counts = inclusion_counts(draws, 2);
        assert_eq!(counts.as_slice(), &[1, 2]);
    }

    #[test]
    fn counts_empty_stream_is_zero() {
        let counts = inclusion_counts(Vec::new(), 4);
        assert_eq!(counts.as_slice(), &[0, 0, 0, 0]);
    }

    #[test]
    fn mean_inclusion_count_matches_binomial() {
        // counts[i] ~ Bin(M, q); with M = 10^4, q = 0.4 the mean over the
        // 1000 independent per-observation counts has se ~ sqrt(Mq(1-q)/n).
        let n = 1000;
        let m = 10_000u64;
        let cfg = SamplingConfig::new(0.4, m, 13).unwrap();
        let counts = inclusion_counts(draw_subsets(n, &cfg), n);
        let mean = counts.total() as f64 / n as f64;
        let se = (m as f64 * 0.4 * 0.6 / n as f64).sqrt();
        assert!((mean - 4000.0).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn bookkeeping_identity_exact() {
        let cfg = SamplingConfig::new(0.3, 200, 5).unwrap();
        let draws: Vec<_> = draw_subsets(37, &cfg).collect();
        let sum_sizes: u64 = draws.iter().map(|d| d.members.len() as u64).sum();
        let counts = inclusion_counts(draws, 37);
        assert_eq!(counts.total(), sum_sizes);
    }

    #[test]
    fn inclusion_frequency_within_four_sigma() {
        let n = 50;
        let m = 10_000u64;
        let cfg = SamplingConfig::new(0.4, m, 21).unwrap();
        let counts = inclusion_counts(draw_subsets(n, &cfg), n);
        let band = 4.0 * (0.4 * 0.6 / m as f64).sqrt();
        for i in 0..n {
            let freq = counts.get(i) as f64 / m as f64;
            assert!((freq - 0.4).abs() <= band, "observation {i}: freq {freq}");
        }
    }

    #[test]
    fn exclusion_never_contains_z() {
        let cfg = SamplingConfig::new(0.5, 1, 3).unwrap();
        for z in 0..10 {
            for m in 1..=20 {
                let s = draw_subset_excluding(10, z, &cfg, m);
                assert!(!s.contains(z));
            }
        }
    }

    #[test]
    fn exclusion_forced_when_n_is_two() {
        let cfg = SamplingConfig::new(0.5, 1, 3).unwrap();
        for m in 1..=50 {
            let s = draw_subset_excluding(2, 0, &cfg, m);
            assert!(s.as_slice() == [1] || s.is_empty());
        }
    }

    #[test]
    fn exclusion_mean_size_matches_binomial() {
        // |B'| ~ Bin(999, 0.4): mean 399.6.
        let n = 1000;
        let reps = 10_000u64;
        let cfg = SamplingConfig::new(0.4, 1, 11).unwrap();
        let total: u64 = (1..=reps)
            .map(|m| draw_subset_excluding(n, 7, &cfg, m).len() as u64)
            .sum();
        let mean = total as f64 / reps as f64;
        let se = (999.0 * 0.4 * 0.6f64).sqrt() / (reps as f64).sqrt();
        assert!((mean - 399.6).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn exclusion_replays() {
        let cfg = SamplingConfig::new(0.4, 1, 17).unwrap();
        assert_eq!(
            draw_subset_excluding(40, 5, &cfg, 9),
            draw_subset_excluding(40, 5, &cfg, 9)
        );
    }

    #[test]
    fn exclusion_stream_differs_from_subset_stream() {
        let cfg = SamplingConfig::new(0.4, 1, 17).unwrap();
        let a = draw_subset(64, &cfg, 1);
        let b = draw_subset_excluding(64, 63, &cfg, 1);
        assert_ne!(a.members.as_slice(), b.as_slice());
    }

    #[test]
    fn covering_counts_supplements_until_positive() {
        // Tiny M with moderate q leaves some of the 20 observations uncovered
        // with high probability; the cover loop must fix that.
        let cfg = SamplingConfig::new(0.2, 4, 2).unwrap();
        let (last, counts) = covering_counts(20, &cfg).unwrap();
        assert!(counts.all_positive());
        assert!(last > 4, "expected supplementary draws, got last={last}");
        // Counts must agree with a replay over the same ordinals.
        let replay = inclusion_counts(draw_subsets_range(20, &cfg, 1, last), 20);
        assert_eq!(counts, replay);
    }

    #[test]
    fn covering_counts_cap_errors_out() {
        // q so small that 10x supplementation cannot cover everything.
        let cfg = SamplingConfig::new(0.001, 2, 2).unwrap();
        let err = covering_counts(200, &cfg).unwrap_err();
        assert!(matches!(err, Error::CoverageCapExceeded { .. }), "{err}");
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(SamplingConfig::new(0.0, 10, 0).is_err());
        assert!(SamplingConfig::new(1.0, 10, 0).is_err());
        assert!(SamplingConfig::new(0.5, 0, 0).is_err());
    }
}
