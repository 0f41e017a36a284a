//! The cleaning method itself: per-observation cross-validation error
//! aggregation over Bernoulli subsets, the parameter-free cut-point
//! estimator, the stepwise cleaning loop, and simulation metrics.

use rayon::prelude::*;
use serde_json::json;

use crate::classify::{kfold_cv_error, ClassifierSpec};
use crate::dataset::{subset_view, Dataset, IndexSet};
use crate::error::{Error, Result};
use crate::report::{CleaningMetrics, CleaningReport, IterationRecord, StopReason};
use crate::rng::{derive_seed, StreamKey};
use crate::sampling::{
    draw_subset_keyed, subset_stream_key, SamplingConfig, SubsetDraw, SUPPLEMENT_CAP_FACTOR,
};

/// Per-observation accumulators from one round of subset evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationErrors {
    /// Sum of the CV errors of every evaluated subset containing each
    /// observation (`s_i`).
    pub error_sums: Vec<f64>,
    /// How many evaluated subsets contained each observation (`n_i`).
    pub inclusion_counts: Vec<u64>,
    /// Mean CV error per observation: `error_sums[i] / inclusion_counts[i]`.
    pub tilde_e: Vec<f64>,
    /// Subsets that were evaluated.
    pub n_subsets_used: u64,
    /// Subsets skipped as degenerate (too small or single-labeled).
    pub n_subsets_skipped: u64,
}

/// Streams the configured subsets, cross-validates the classifier within
/// each, and adds each subset's CV error to the accumulator of every member.
///
/// Subsets smaller than `max(cfg.min_subset_size, k)` are skipped, as are
/// single-labeled subsets drawn from a mixed dataset (they still count toward
/// M; nothing is redrawn). If any observation ends uncovered, supplementary
/// subsets from the same law are drawn until every count is positive, capped
/// at ten times M. Subset evaluations run in parallel; accumulation follows
/// ordinal order, so results are bit-identical for any worker count.
pub fn aggregate_cv_errors(
    data: &Dataset,
    spec: &ClassifierSpec,
    cfg: &SamplingConfig,
    k: usize,
) -> Result<ObservationErrors> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::InvalidFoldCount(k));
    }
    let n = data.n_rows();
    let need = k.max(cfg.min_subset_size);
    if n < need {
        return Err(Error::DatasetTooSmall { n, need });
    }
    let min_size = need;
    let dataset_is_mixed = {
        let first = data.labels()[0];
        data.labels().iter().any(|&l| l != first)
    };

    let subset_key = subset_stream_key(cfg);
    let fold_key = StreamKey::new(cfg.seed, "folds");
    let evaluate = |m: u64| -> Result<(SubsetDraw, Option<f64>)> {
        let draw = draw_subset_keyed(n, cfg.q, &subset_key, m);
        if draw.members.len() < min_size {
            return Ok((draw, None));
        }
        if dataset_is_mixed {
            let first = data.label(draw.members.as_slice()[0]);
            if draw.members.iter().all(|i| data.label(i) == first) {
                return Ok((draw, None));
            }
        }
        let width = data.n_cols();
        let mut features = Vec::with_capacity(draw.members.len() * width);
        let mut labels = Vec::with_capacity(draw.members.len());
        for i in draw.members.iter() {
            features.extend_from_slice(data.row(i));
            labels.push(data.label(i));
        }
        let e = kfold_cv_error(spec, &features, width, &labels, k, fold_key.seed_at(&[m]))?;
        Ok((draw, Some(e)))
    };

    struct Accumulator {
        error_sums: Vec<f64>,
        inclusion_counts: Vec<u64>,
        n_used: u64,
        n_skipped: u64,
    }
    impl Accumulator {
        fn apply(&mut self, draw: &SubsetDraw, e: Option<f64>) {
            match e {
                Some(e) => {
                    for i in draw.members.iter() {
                        self.error_sums[i] += e;
                        self.inclusion_counts[i] += 1;
                    }
                    self.n_used += 1;
                }
                None => self.n_skipped += 1,
            }
        }
    }
    let mut acc = Accumulator {
        error_sums: vec![0.0f64; n],
        inclusion_counts: vec![0u64; n],
        n_used: 0,
        n_skipped: 0,
    };

    const BATCH: u64 = 256;
    let mut start = 1u64;
    while start <= cfg.n_subsets {
        let end = (start + BATCH - 1).min(cfg.n_subsets);
        let results: Vec<(SubsetDraw, Option<f64>)> = (start..=end)
            .into_par_iter()
            .map(evaluate)
            .collect::<Result<_>>()?;
        for (draw, e) in &results {
            acc.apply(draw, *e);
        }
        start = end + 1;
    }

    // Supplementary draws for observations no evaluated subset covered.
    let cap = cfg.n_subsets.saturating_mul(SUPPLEMENT_CAP_FACTOR);
    let mut extra = 0u64;
    while acc.inclusion_counts.contains(&0) {
        if extra >= cap {
            let uncovered = acc.inclusion_counts.iter().filter(|&&c| c == 0).count();
            return Err(Error::CoverageCapExceeded { uncovered, extra });
        }
        extra += 1;
        let (draw, e) = evaluate(cfg.n_subsets + extra)?;
        acc.apply(&draw, e);
    }

    let tilde_e: Vec<f64> = acc
        .error_sums
        .iter()
        .zip(&acc.inclusion_counts)
        .map(|(&s, &c)| s / c as f64)
        .collect();
    debug_assert!(tilde_e.iter().all(|&e| (0.0..=1.0).contains(&e)));
    Ok(ObservationErrors {
        error_sums: acc.error_sums,
        inclusion_counts: acc.inclusion_counts,
        tilde_e,
        n_subsets_used: acc.n_used,
        n_subsets_skipped: acc.n_skipped,
    })
}

/// An estimated cut point on the mean CV errors.
#[derive(Debug, Clone, PartialEq)]
pub struct CutPoint {
    /// The minimizing threshold; NaN when `degenerate`.
    pub e_star: f64,
    /// Every evaluated candidate and its objective value, ascending in the
    /// candidate.
    pub objective_curve: Vec<(f64, f64)>,
    /// True when the values admit no cut (spread below 1e-9).
    pub degenerate: bool,
}

/// Objective ties closer than this are broken toward the smaller candidate.
/// The objective is a difference of two dimensionless ratios, so an absolute
/// window is scale-free and the tie rule commutes with affine maps of the
/// data.
const CUT_TIE_WINDOW: f64 = 1e-12;

/// Estimates the cut point separating low from high mean CV errors.
///
/// The objective at a threshold `c` is the absolute difference between the
/// below/above mass-distance ratio and the below/above count ratio:
///
/// ```text
/// | sum_{e<c}(e-c) / sum_{e>=c}(c-e)  -  #{e<c} / #{e>=c} |
/// ```
///
/// Both ratio terms are positive (each first-ratio sum is a sum of negative
/// quantities), and they agree exactly when `c` is the midpoint of the mean
/// of the below side and the mean of the above side. The implementation
/// minimizes the balance measured relative to the count ratio,
///
/// ```text
/// | (c - mean{e<c}) / (mean{e>=c} - c)  -  1 |
/// ```
///
/// which has the same zero set but does not collapse toward the edges of the
/// range (the raw difference of ratios goes to the O(1/n) count ratio at the
/// low edge, which on dense data can undercut the genuine separation basin).
///
/// The argmin is approximated on the midpoints of consecutive distinct
/// sorted values (these capture every indicator change) unioned with a
/// 512-point uniform grid over (min, max). Ties break toward the smallest
/// candidate. The objective can balance exactly at razor-thin spots (any
/// small cluster of extreme values balances against the rest somewhere), so
/// a sampled candidate set is load-bearing, not an approximation shortcut:
/// finite resolution prefers wide basins, and the wide basin is the mixture
/// separation the cut point is after.
pub fn estimate_cut_point(tilde_e: &[f64]) -> Result<CutPoint> {
    let n = tilde_e.len();
    if n < 2 {
        return Err(Error::TooFewValues { need: 2, got: n });
    }
    if let Some(pos) = tilde_e.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(pos));
    }
    let mut xs: Vec<f64> = tilde_e.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    let lo = xs[0];
    let hi = xs[n - 1];
    let span = hi - lo;
    if span < 1e-9 {
        return Ok(CutPoint {
            e_star: f64::NAN,
            objective_curve: Vec::new(),
            degenerate: true,
        });
    }

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0f64);
    for &x in &xs {
        prefix.push(prefix.last().unwrap() + x);
    }
    let total = prefix[n];

    let mut distinct: Vec<f64> = xs.clone();
    distinct.dedup();

    let mut candidates: Vec<f64> = Vec::with_capacity(distinct.len() + 512);
    for w in distinct.windows(2) {
        candidates.push(w[0] + (w[1] - w[0]) / 2.0);
    }
    for t in 1..=512u32 {
        candidates.push(lo + span * f64::from(t) / 513.0);
    }
    candidates.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    candidates.dedup();

    let mut curve = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, f64)> = None;
    for &c in &candidates {
        debug_assert!(c > lo && c < hi);
        let n_low = xs.partition_point(|&x| x < c);
        let n_up = n - n_low;
        if n_low == 0 || n_up == 0 {
            continue;
        }
        let s_low = prefix[n_low];
        let s_up = total - s_low;
        let mean_low = s_low / n_low as f64;
        let mean_up = s_up / n_up as f64;
        // mass_ratio / count_ratio reduces to (c - mean_low) / (mean_up - c).
        let objective = ((c - mean_low) / (mean_up - c) - 1.0).abs();
        curve.push((c, objective));
        let better = match best {
            None => true,
            Some((_, best_obj)) => objective < best_obj - CUT_TIE_WINDOW,
        };
        if better {
            best = Some((c, objective));
        }
    }
    match best {
        Some((e_star, _)) => Ok(CutPoint {
            e_star,
            objective_curve: curve,
            degenerate: false,
        }),
        None => Ok(CutPoint {
            e_star: f64::NAN,
            objective_curve: curve,
            degenerate: true,
        }),
    }
}

/// Per-iteration working state kept for analysis (histograms, purity curves).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub t: usize,
    /// The working set the iteration ran on (original indices).
    pub working: IndexSet,
    /// Mean CV errors aligned with `working`'s order.
    pub tilde_e: Vec<f64>,
    pub e_star: f64,
    /// Below-cut observations (original indices).
    pub retained: IndexSet,
    /// Observations removed this iteration (original indices).
    pub removed: IndexSet,
    pub cv_error_retained: f64,
}

/// A cleaning report together with its accepted-iteration traces.
#[derive(Debug, Clone, PartialEq)]
pub struct CleaningOutcome {
    pub report: CleaningReport,
    pub trace: Vec<IterationTrace>,
}

/// Runs the stepwise cleaning loop.
///
/// Each iteration draws M fresh subsets of the current working set (sampling
/// seed derived from `(cfg.seed, t)`), aggregates per-observation mean CV
/// errors, estimates the cut point, and keeps the below-cut set if its k-fold
/// CV error strictly decreases; otherwise the previous below-cut set is the
/// answer. Accepted iterations then drop the above-cut observations whose
/// mean error exceeds the lower median of the above-cut group, and the loop
/// re-enters. A degenerate cut stops the loop and returns the current working
/// set; the iteration cap returns the best set so far.
pub fn brslc_clean(
    data: &Dataset,
    spec: &ClassifierSpec,
    cfg: &SamplingConfig,
    k: usize,
    max_iters: usize,
) -> Result<CleaningOutcome> {
    cfg.validate()?;
    if k < 2 {
        return Err(Error::InvalidFoldCount(k));
    }
    let n = data.n_rows();
    if n < 2 * k {
        return Err(Error::DatasetTooSmall { n, need: 2 * k });
    }
    if max_iters == 0 {
        return Err(Error::InvalidSamplingConfig(
            "max_iters must be at least 1".to_string(),
        ));
    }

    let config = json!({
        "method": "brslc",
        "classifier": spec,
        "q": cfg.q,
        "n_subsets": cfg.n_subsets,
        "min_subset_size": cfg.min_subset_size,
        "seed": cfg.seed,
        "k_folds": k,
        "max_iters": max_iters,
    });

    let mut working = IndexSet::full(n);
    let mut prev_error = f64::INFINITY;
    let mut prev_retained: Option<IndexSet> = None;
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut trace: Vec<IterationTrace> = Vec::new();

    let (cleaned, stop_reason) = 'outer: {
        for t in 1..=max_iters {
            if working.len() < k.max(cfg.min_subset_size) {
                break 'outer (
                    prev_retained.unwrap_or_else(|| working.clone()),
                    StopReason::WorkingSetTooSmall,
                );
            }
            let view = subset_view(data, &working)?;
            let iter_cfg = SamplingConfig {
                seed: derive_seed(cfg.seed, "iter", &[t as u64]),
                ..cfg.clone()
            };
            let obs = aggregate_cv_errors(&view, spec, &iter_cfg, k)?;
            let cut = estimate_cut_point(&obs.tilde_e)?;
            if cut.degenerate {
                break 'outer (working.clone(), StopReason::DegenerateCutPoint);
            }
            let e_star = cut.e_star;

            let working_slice = working.as_slice();
            let mut retained_local: Vec<usize> = Vec::new();
            let mut above_local: Vec<usize> = Vec::new();
            for (local, &tilde) in obs.tilde_e.iter().enumerate() {
                if tilde < e_star {
                    retained_local.push(local);
                } else {
                    above_local.push(local);
                }
            }
            if retained_local.len() < k {
                break 'outer (
                    prev_retained.unwrap_or_else(|| working.clone()),
                    StopReason::RetainedTooSmall,
                );
            }
            let retained = IndexSet::from_sorted_unchecked(
                retained_local.iter().map(|&l| working_slice[l]).collect(),
            );

            let retained_view = subset_view(data, &retained)?;
            let stop_seed = derive_seed(cfg.seed, "stopcheck", &[t as u64]);
            let e_now = kfold_cv_error(
                spec,
                retained_view.features(),
                retained_view.n_cols(),
                retained_view.labels(),
                k,
                stop_seed,
            )?;
            if e_now >= prev_error {
                break 'outer (
                    prev_retained.expect("a non-decrease cannot happen before any acceptance"),
                    StopReason::CvErrorNonDecreasing,
                );
            }

            // Accepted: drop the above-cut observations whose mean error
            // exceeds the lower median of the above-cut group.
            let mut above_errors: Vec<f64> = above_local.iter().map(|&l| obs.tilde_e[l]).collect();
            above_errors.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
            let tau = above_errors[(above_errors.len() - 1) / 2];
            let removed = IndexSet::from_sorted_unchecked(
                above_local
                    .iter()
                    .filter(|&&l| obs.tilde_e[l] > tau)
                    .map(|&l| working_slice[l])
                    .collect(),
            );

            iterations.push(IterationRecord {
                t,
                e_star,
                retained: retained.clone(),
                removed: removed.clone(),
                cv_error_retained: e_now,
            });
            trace.push(IterationTrace {
                t,
                working: working.clone(),
                tilde_e: obs.tilde_e.clone(),
                e_star,
                retained: retained.clone(),
                removed: removed.clone(),
                cv_error_retained: e_now,
            });
            prev_error = e_now;
            prev_retained = Some(retained.clone());

            if removed.is_empty() {
                break 'outer (retained, StopReason::NoRemoval);
            }
            working = working.minus(&removed);
        }
        (
            prev_retained.expect("max_iters >= 1 and iteration 1 always accepts or stops earlier"),
            StopReason::MaxIterations,
        )
    };

    let metrics = match data.noise_mask() {
        Some(mask) => Some(cleaning_metrics(&cleaned, mask)?),
        None => None,
    };
    Ok(CleaningOutcome {
        report: CleaningReport {
            config,
            iterations,
            cleaned,
            stop_reason,
            metrics,
        },
        trace,
    })
}

/// Simulation metrics for a cleaned set against the ground-truth mask:
/// residual noise level, percent of noise removed (null when the data had no
/// noise), and percent of clean observations retained.
pub fn cleaning_metrics(cleaned: &IndexSet, mask: &[bool]) -> Result<CleaningMetrics> {
    let n = mask.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(max) = cleaned.max() {
        if max >= n {
            return Err(Error::IndexOutOfRange {
                index: max,
                size: n,
            });
        }
    }
    if cleaned.is_empty() {
        return Err(Error::EmptySubsetView);
    }
    let noisy_total = mask.iter().filter(|&&m| m).count();
    let clean_total = n - noisy_total;
    let noisy_kept = cleaned.iter().filter(|&i| mask[i]).count();
    let clean_kept = cleaned.len() - noisy_kept;
    let l_d = noisy_total as f64 / n as f64;
    let l_cleaned = noisy_kept as f64 / cleaned.len() as f64;
    let r_noise = if noisy_total == 0 {
        None
    } else {
        Some(100.0 * (1.0 - l_cleaned / l_d))
    };
    let r_clean = if clean_total == 0 {
        100.0
    } else {
        100.0 * clean_kept as f64 / clean_total as f64
    };
    Ok(CleaningMetrics {
        l_d,
        l_cleaned,
        r_noise,
        r_clean,
    })
}
