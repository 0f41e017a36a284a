//! Process-level classifier plugin.
//!
//! The contract: the plugin executable is invoked as
//!
//! ```text
//! <program> <train.csv> <test.csv> <predictions.csv>
//! ```
//!
//! where `train.csv` has headered feature columns `f1..fp` plus a final
//! `label` column of integer class ids, and `test.csv` has the feature
//! columns only. The plugin must write `predictions.csv` with one integer
//! label per test row (no header). A nonzero exit status is a classifier
//! error. This lets SVMs or neural models slot in without linking.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::Command;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExternalModel {
    program: PathBuf,
    train_features: Vec<f64>,
    width: usize,
    train_labels: Vec<u32>,
}

impl ExternalModel {
    pub(crate) fn fit(program: PathBuf, features: &[f64], width: usize, labels: &[u32]) -> Self {
        ExternalModel {
            program,
            train_features: features.to_vec(),
            width,
            train_labels: labels.to_vec(),
        }
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn predict(&self, queries: &[f64]) -> Result<Vec<u32>> {
        let n_queries = queries.len() / self.width;
        let dir = tempfile::tempdir().map_err(|source| Error::Io {
            path: PathBuf::from("<tempdir>"),
            source,
        })?;
        let train_path = dir.path().join("train.csv");
        let test_path = dir.path().join("test.csv");
        let pred_path = dir.path().join("predictions.csv");

        write_matrix_csv(
            &train_path,
            &self.train_features,
            self.width,
            Some(&self.train_labels),
        )?;
        write_matrix_csv(&test_path, queries, self.width, None)?;

        let output = Command::new(&self.program)
            .arg(&train_path)
            .arg(&test_path)
            .arg(&pred_path)
            .output()
            .map_err(|source| Error::Io {
                path: self.program.clone(),
                source,
            })?;
        if !output.status.success() {
            return Err(Error::PluginFailed {
                program: self.program.clone(),
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }

        let text = std::fs::read_to_string(&pred_path).map_err(|_| Error::PluginBadOutput {
            program: self.program.clone(),
            reason: "predictions.csv was not written".to_string(),
        })?;
        let mut predictions = Vec::with_capacity(n_queries);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let label: u32 = line.parse().map_err(|_| Error::PluginBadOutput {
                program: self.program.clone(),
                reason: format!("non-integer prediction {line:?}"),
            })?;
            if label == 0 {
                return Err(Error::PluginBadOutput {
                    program: self.program.clone(),
                    reason: "class ids start at 1".to_string(),
                });
            }
            predictions.push(label);
        }
        if predictions.len() != n_queries {
            return Err(Error::PluginBadOutput {
                program: self.program.clone(),
                reason: format!(
                    "expected {n_queries} predictions, got {}",
                    predictions.len()
                ),
            });
        }
        Ok(predictions)
    }
}

fn write_matrix_csv(
    path: &std::path::Path,
    features: &[f64],
    width: usize,
    labels: Option<&[u32]>,
) -> Result<()> {
    let mut out = String::new();
    for c in 1..=width {
        if c > 1 {
            out.push(',');
        }
        let _ = write!(out, "f{c}");
    }
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    let n = features.len() / width;
    for r in 0..n {
        for c in 0..width {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", features[r * width + c]);
        }
        if let Some(labels) = labels {
            let _ = write!(out, ",{}", labels[r]);
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
