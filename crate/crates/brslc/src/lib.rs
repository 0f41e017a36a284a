//! Label noise cleaning for supervised classification via Bernoulli random
//! subset sampling.
//!
//! The toolkit separates correctly and incorrectly labeled observations by
//! repeatedly cross-validating a classifier inside Bernoulli random subsets
//! of the data: every observation accumulates the CV errors of the subsets
//! containing it, mislabeled observations accumulate systematically larger
//! means, a parameter-free cut point splits the two groups, and a stepwise
//! loop removes the worst of the above-cut group until the retained set's CV
//! error stops improving.
//!
//! Modules, bottom-up:
//!
//! - [`dataset`]: immutable datasets, CSV ingestion, index-set views.
//! - [`sampling`]: seeded Bernoulli subset streams and inclusion counts.
//! - [`theory`]: the verification lab for the distributional claims behind
//!   the method (mean noise levels, their independent coupling, exact group
//!   laws, the mean gap).
//! - [`classify`]: 1-NN and CART-style reference classifiers, k-fold CV, and
//!   the external-process classifier seam.
//! - [`clean`]: per-observation CV-error aggregation, the cut-point
//!   estimator, the cleaning loop, and cleaning metrics.
//! - [`simgen`]: synthetic data settings and symmetric label-noise injection.
//! - [`report`]: cleaning reports and their JSON file format.
//! - [`rng`]: deterministic stream derivation underneath everything.
//!
//! Everything is a pure function of explicit seeds: replaying a
//! configuration replays every draw and every result bit for bit, on any
//! number of workers.

pub mod classify;
pub mod clean;
pub mod dataset;
pub mod error;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod simgen;
pub mod theory;

/// The user guide, compiled from `book/src`. Each Rust snippet in the
/// chapters runs as a doctest, keeping the guide in sync with the API.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    pub mod datasets {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    pub mod sampling {}
    #[doc = include_str!("../../../book/src/noise-levels.md")]
    pub mod noise_levels {}
    #[doc = include_str!("../../../book/src/classifiers.md")]
    pub mod classifiers {}
    #[doc = include_str!("../../../book/src/cut-point.md")]
    pub mod cut_point {}
    #[doc = include_str!("../../../book/src/cleaning.md")]
    pub mod cleaning {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
