//! Dataset model, CSV ingestion, validation, and index-based subset views.
//!
//! A [`Dataset`] is an immutable table of `N` rows with `p` finite real
//! features and dense class labels `1..=K`. Simulated datasets additionally
//! carry a noise mask marking which rows had their label flipped; the mask is
//! only ever known in simulation and is never consulted by the cleaning
//! method itself.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sorted, deduplicated set of row indices into some dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    /// Normalizes arbitrary indices into a sorted, deduplicated set.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        IndexSet { indices }
    }

    /// All indices `0..n`.
    pub fn full(n: usize) -> Self {
        IndexSet {
            indices: (0..n).collect(),
        }
    }

    /// Wraps a vector that is already strictly increasing.
    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        IndexSet { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Largest index, if any.
    pub fn max(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    /// Set difference `self \ other`.
    pub fn minus(&self, other: &IndexSet) -> IndexSet {
        IndexSet::from_sorted_unchecked(
            self.indices
                .iter()
                .copied()
                .filter(|i| !other.contains(*i))
                .collect(),
        )
    }

    /// Whether every element of `self` also lies in `other`.
    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.indices.iter().all(|i| other.contains(*i))
    }
}

impl From<Vec<usize>> for IndexSet {
    fn from(v: Vec<usize>) -> Self {
        IndexSet::new(v)
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Self {
        s.indices
    }
}

/// An immutable labeled dataset.
///
/// Labels are dense class ids `1..=K`; the original label strings observed at
/// load time are kept in a side map for reporting. Feature standardization is
/// never applied implicitly — see [`Dataset::standardized`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n_rows * n_cols
    n_rows: usize,
    n_cols: usize,
    labels: Vec<u32>,
    n_classes: u32,
    feature_names: Vec<String>,
    label_column: String,
    label_names: Vec<String>,
    noise_mask: Option<Vec<bool>>,
    warnings: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row vectors and labels that are already dense
    /// class ids `1..=K` with every class occupied.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<u32>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let n_cols = rows[0].len();
        if n_cols == 0 {
            return Err(Error::NoFeatureColumns);
        }
        let mut features = Vec::with_capacity(rows.len() * n_cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::LengthMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteFeature {
                        row: r,
                        column: format!("f{}", c + 1),
                    });
                }
                features.push(v);
            }
        }
        let n_classes = *labels.iter().max().expect("nonempty");
        let mut seen = vec![false; n_classes as usize];
        for &l in &labels {
            if l == 0 {
                return Err(Error::NonContiguousLabels(0));
            }
            seen[(l - 1) as usize] = true;
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(Error::NonContiguousLabels(gap as u32 + 1));
        }
        let feature_names = (1..=n_cols).map(|c| format!("f{c}")).collect();
        let label_names = (1..=n_classes).map(|l| l.to_string()).collect();
        let n_rows = rows.len();
        let mut d = Dataset {
            features,
            n_rows,
            n_cols,
            labels,
            n_classes,
            feature_names,
            label_column: "label".to_string(),
            label_names,
            noise_mask: None,
            warnings: Vec::new(),
        };
        d.warnings = d.compute_warnings();
        Ok(d)
    }

    fn compute_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.n_rows == 1 {
            w.push("dataset has a single row".to_string());
        }
        let distinct = {
            let mut seen = vec![false; self.n_classes as usize];
            for &l in &self.labels {
                seen[(l - 1) as usize] = true;
            }
            seen.iter().filter(|s| **s).count()
        };
        if distinct < 2 {
            w.push("only one distinct label occurs".to_string());
        }
        w
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Feature dimension p.
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of declared classes K.
    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Row-major feature storage.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    /// Original label string for a dense class id.
    pub fn label_name(&self, label: u32) -> &str {
        &self.label_names[(label - 1) as usize]
    }

    pub fn noise_mask(&self) -> Option<&[bool]> {
        self.noise_mask.as_deref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Attaches a noise mask (true = the observation's label was flipped).
    pub fn with_noise_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                expected: self.n_rows,
                got: mask.len(),
            });
        }
        self.noise_mask = Some(mask);
        Ok(self)
    }

    pub(crate) fn replace_labels(&self, labels: Vec<u32>) -> Dataset {
        debug_assert_eq!(labels.len(), self.n_rows);
        Dataset {
            labels,
            ..self.clone()
        }
    }

    /// Per-column z-scored copy (zero-variance columns are only centered).
    /// Standardization is opt-in; nothing in the toolkit applies it silently.
    pub fn standardized(&self) -> Dataset {
        let mut out = self.clone();
        for c in 0..self.n_cols {
            let mut mean = 0.0;
            for r in 0..self.n_rows {
                mean += self.features[r * self.n_cols + c];
            }
            mean /= self.n_rows as f64;
            let mut var = 0.0;
            for r in 0..self.n_rows {
                let d = self.features[r * self.n_cols + c] - mean;
                var += d * d;
            }
            var /= self.n_rows as f64;
            let sd = var.sqrt();
            for r in 0..self.n_rows {
                let v = &mut out.features[r * self.n_cols + c];
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
        out
    }
}

/// Restriction of a dataset to the given rows.
///
/// The view is a fresh immutable dataset; class ids, label names, and the
/// noise mask are carried over unchanged, so a view may mention fewer than K
/// distinct labels.
pub fn subset_view(d: &Dataset, s: &IndexSet) -> Result<Dataset> {
    if s.is_empty() {
        return Err(Error::EmptySubsetView);
    }
    if let Some(max) = s.max() {
        if max >= d.n_rows {
            return Err(Error::IndexOutOfRange {
                index: max,
                size: d.n_rows,
            });
        }
    }
    let mut features = Vec::with_capacity(s.len() * d.n_cols);
    let mut labels = Vec::with_capacity(s.len());
    for i in s.iter() {
        features.extend_from_slice(d.row(i));
        labels.push(d.labels[i]);
    }
    let noise_mask = d
        .noise_mask
        .as_ref()
        .map(|m| s.iter().map(|i| m[i]).collect());
    Ok(Dataset {
        features,
        n_rows: s.len(),
        n_cols: d.n_cols,
        labels,
        n_classes: d.n_classes,
        feature_names: d.feature_names.clone(),
        label_column: d.label_column.clone(),
        label_names: d.label_names.clone(),
        noise_mask,
        warnings: Vec::new(),
    })
}

/// Loads a dataset from a UTF-8, comma-separated, headered CSV file.
///
/// Every column other than `label_column` must be numeric and finite. Label
/// values are re-encoded to dense ids `1..=K` in first-appearance order; the
/// original strings are kept for reporting and for [`save_csv`].
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::NoFeatureColumns);
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut n_rows = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let mut feature_pos = 0usize;
        let mut label_cell: Option<&str> = None;
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                label_cell = Some(cell);
                continue;
            }
            let column = feature_names
                .get(feature_pos)
                .cloned()
                .unwrap_or_else(|| format!("col{i}"));
            feature_pos += 1;
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericFeature {
                row,
                column: column.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, column });
            }
            features.push(v);
        }
        let label_cell = label_cell.filter(|c| !c.trim().is_empty());
        let label_str = label_cell.ok_or(Error::MissingLabel { row })?.trim();
        let id = match label_names.iter().position(|l| l == label_str) {
            Some(pos) => pos as u32 + 1,
            None => {
                label_names.push(label_str.to_string());
                label_names.len() as u32
            }
        };
        labels.push(id);
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::EmptyDataset);
    }
    let n_cols = feature_names.len();
    let n_classes = label_names.len() as u32;
    let mut d = Dataset {
        features,
        n_rows,
        n_cols,
        labels,
        n_classes,
        feature_names,
        label_column: label_column.to_string(),
        label_names,
        noise_mask: None,
        warnings: Vec::new(),
    };
    d.warnings = d.compute_warnings();
    Ok(d)
}

/// Writes the dataset back out as CSV: feature columns first, label last.
/// Floats use the shortest representation that parses back to the same bits,
/// so `load_csv(save_csv(d))` reproduces the features exactly.
pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut header: Vec<&str> = d.feature_names.iter().map(String::as_str).collect();
    header.push(&d.label_column);
    writer.write_record(&header).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cell = String::new();
    for i in 0..d.n_rows {
        let mut record: Vec<String> = Vec::with_capacity(d.n_cols + 1);
        for &v in d.row(i) {
            cell.clear();
            write!(cell, "{v}").expect("format into string");
            record.push(cell.clone());
        }
        record.push(d.label_name(d.labels[i]).to_string());
        writer.write_record(&record).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Writes a noise mask as a one-column CSV (`noisy`; rows are 0/1).
pub fn save_mask_csv(mask: &[bool], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("noisy\n");
    for &m in mask {
        out.push(if m { '1' } else { '0' });
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a noise mask written by [`save_mask_csv`].
pub fn load_mask_csv(path: impl AsRef<Path>) -> Result<Vec<bool>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "noisy" => {}
        _ => {
            return Err(Error::MissingLabelColumn("noisy".to_string()));
        }
    }
    let mut mask = Vec::new();
    for (row, line) in lines.enumerate() {
        match line.trim() {
            "0" | "false" => mask.push(false),
            "1" | "true" => mask.push(true),
            other => {
                return Err(Error::NonNumericFeature {
                    row,
                    column: "noisy".to_string(),
                    value: other.to_string(),
                })
            }
        }
    }
    if mask.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(mask)
}
