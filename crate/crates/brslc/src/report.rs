//! Cleaning reports and their JSON file format.
//!
//! The in-memory [`CleaningReport`] keeps full index sets per iteration for
//! downstream analysis; [`save_report`] writes the compact file schema
//!
//! ```text
//! {config, iterations: [{t, e_star, n_retained, cv_error, removed_indices}],
//!  cleaned_indices, metrics, stop_reason}
//! ```
//!
//! which round-trips losslessly through [`load_report`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::IndexSet;
use crate::error::{Error, Result};

/// Why the cleaning loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The retained set's CV error failed to strictly decrease.
    CvErrorNonDecreasing,
    /// No cut point exists (all mean errors essentially equal).
    DegenerateCutPoint,
    /// The below-cut set was too small to cross-validate.
    RetainedTooSmall,
    /// The working set shrank below what sampling + CV can use.
    WorkingSetTooSmall,
    /// An accepted iteration removed nothing, so iterating further would not
    /// change the working set.
    NoRemoval,
    /// The iteration cap was reached.
    MaxIterations,
}

/// One accepted cleaning iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Iteration number, starting at 1.
    pub t: usize,
    /// The cut point estimated on this iteration's working set.
    pub e_star: f64,
    /// Below-cut observations (original dataset indices).
    pub retained: IndexSet,
    /// Observations removed from the working set this iteration.
    pub removed: IndexSet,
    /// k-fold CV error of the retained set; strictly decreasing across
    /// accepted iterations.
    pub cv_error_retained: f64,
}

/// Simulation-only cleaning quality metrics (require a noise mask).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningMetrics {
    /// Noisy fraction of the original dataset.
    pub l_d: f64,
    /// Noisy fraction of the cleaned dataset.
    pub l_cleaned: f64,
    /// Percent of label noise removed; null when `l_d` is zero.
    pub r_noise: Option<f64>,
    /// Percent of clean observations retained.
    pub r_clean: f64,
}

/// Full result of a cleaning run.
#[derive(Debug, Clone, PartialEq)]
pub struct CleaningReport {
    /// Echo of the resolved configuration that produced this report.
    pub config: serde_json::Value,
    /// Accepted iterations only, in order.
    pub iterations: Vec<IterationRecord>,
    /// The final cleaned index set (original dataset indices).
    pub cleaned: IndexSet,
    pub stop_reason: StopReason,
    pub metrics: Option<CleaningMetrics>,
}

/// The serialized form of an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportIteration {
    pub t: usize,
    pub e_star: f64,
    pub n_retained: usize,
    pub cv_error: f64,
    pub removed_indices: Vec<usize>,
}

/// The on-disk report schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub config: serde_json::Value,
    pub iterations: Vec<ReportIteration>,
    pub cleaned_indices: Vec<usize>,
    pub metrics: Option<CleaningMetrics>,
    pub stop_reason: StopReason,
}

impl CleaningReport {
    /// The file-schema view of this report.
    pub fn to_file_view(&self) -> ReportFile {
        ReportFile {
            config: self.config.clone(),
            iterations: self
                .iterations
                .iter()
                .map(|it| ReportIteration {
                    t: it.t,
                    e_star: it.e_star,
                    n_retained: it.retained.len(),
                    cv_error: it.cv_error_retained,
                    removed_indices: it.removed.as_slice().to_vec(),
                })
                .collect(),
            cleaned_indices: self.cleaned.as_slice().to_vec(),
            metrics: self.metrics.clone(),
            stop_reason: self.stop_reason,
        }
    }
}

/// Writes the report JSON. Numeric fields reproduce byte-for-byte when the
/// run that produced the report is replayed.
pub fn save_report(report: &CleaningReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = report.to_file_view();
    let json = serde_json::to_string_pretty(&file).expect("report serializes");
    std::fs::write(path, json).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ReportFile> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}
