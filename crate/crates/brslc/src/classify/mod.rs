//! Classifier plugin interface, the two built-in reference classifiers
//! (1-NN by default, and a CART-style tree), and k-fold cross-validation.
//!
//! Everything is deterministic: identical `(spec, data, k, seed)` give the
//! same cross-validation error to the last bit, whatever the worker count.

mod external;
mod knn;
mod tree;

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub use external::ExternalModel;
pub use knn::KnnModel;
pub use tree::TreeModel;

pub const DEFAULT_KNN_NEIGHBORS: usize = 1;
pub const DEFAULT_TREE_MAX_DEPTH: usize = 8;
pub const DEFAULT_TREE_MIN_LEAF: usize = 2;

/// Which classifier to run and with what hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn { k_neighbors: usize },
    Tree { max_depth: usize, min_leaf: usize },
    External { program: PathBuf },
}

/// A classifier choice plus a tie-breaking seed.
///
/// The built-ins resolve every tie by index or class id, so the seed only
/// matters to plugins that choose to read it from their inputs; it is kept in
/// the spec so configurations echo completely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub kind: ClassifierKind,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn knn(k_neighbors: usize) -> Result<Self> {
        if k_neighbors == 0 {
            return Err(Error::InvalidClassifierSpec(
                "k_neighbors must be at least 1".to_string(),
            ));
        }
        Ok(ClassifierSpec {
            kind: ClassifierKind::Knn { k_neighbors },
            seed: 0,
        })
    }

    /// The 1-nearest-neighbor default.
    pub fn knn1() -> Self {
        Self::knn(DEFAULT_KNN_NEIGHBORS).expect("1 is valid")
    }

    pub fn tree(max_depth: usize, min_leaf: usize) -> Result<Self> {
        if min_leaf == 0 {
            return Err(Error::InvalidClassifierSpec(
                "min_leaf must be at least 1".to_string(),
            ));
        }
        Ok(ClassifierSpec {
            kind: ClassifierKind::Tree {
                max_depth,
                min_leaf,
            },
            seed: 0,
        })
    }

    pub fn tree_default() -> Self {
        Self::tree(DEFAULT_TREE_MAX_DEPTH, DEFAULT_TREE_MIN_LEAF).expect("defaults are valid")
    }

    pub fn external(program: impl Into<PathBuf>) -> Self {
        ClassifierSpec {
            kind: ClassifierKind::External {
                program: program.into(),
            },
            seed: 0,
        }
    }

    /// Parses the command-line syntax:
    /// `knn`, `knn:K`, `tree`, `tree:MAX_DEPTH[,MIN_LEAF]`, `external:PATH`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, Some(r)),
            None => (s, None),
        };
        match kind {
            "knn" => {
                let k = match rest {
                    None => DEFAULT_KNN_NEIGHBORS,
                    Some(r) => r.parse().map_err(|_| {
                        Error::InvalidClassifierSpec(format!("bad k_neighbors {r:?}"))
                    })?,
                };
                Self::knn(k)
            }
            "tree" => {
                let (max_depth, min_leaf) = match rest {
                    None => (DEFAULT_TREE_MAX_DEPTH, DEFAULT_TREE_MIN_LEAF),
                    Some(r) => {
                        let mut parts = r.splitn(2, ',');
                        let depth = parts.next().unwrap_or_default().parse().map_err(|_| {
                            Error::InvalidClassifierSpec(format!("bad max_depth in {r:?}"))
                        })?;
                        let leaf = match parts.next() {
                            None => DEFAULT_TREE_MIN_LEAF,
                            Some(l) => l.parse().map_err(|_| {
                                Error::InvalidClassifierSpec(format!("bad min_leaf in {r:?}"))
                            })?,
                        };
                        (depth, leaf)
                    }
                };
                Self::tree(max_depth, min_leaf)
            }
            "external" => match rest {
                Some(path) if !path.is_empty() => Ok(Self::external(path)),
                _ => Err(Error::InvalidClassifierSpec(
                    "external classifier needs a path: external:<path>".to_string(),
                )),
            },
            other => Err(Error::InvalidClassifierSpec(format!(
                "unknown classifier {other:?} (expected knn, tree, or external:<path>)"
            ))),
        }
    }
}

/// A fitted classifier. Prediction is deterministic given the model.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Knn(KnnModel),
    Tree(TreeModel),
    External(ExternalModel),
}

impl TrainedModel {
    fn width(&self) -> usize {
        match self {
            TrainedModel::Knn(m) => m.width(),
            TrainedModel::Tree(m) => m.width(),
            TrainedModel::External(m) => m.width(),
        }
    }
}

/// Fits a classifier on row-major `features` (`width` columns per row).
/// Single-class training sets are legal: the model predicts that class
/// everywhere.
pub fn train(
    spec: &ClassifierSpec,
    features: &[f64],
    width: usize,
    labels: &[u32],
) -> Result<TrainedModel> {
    if labels.is_empty() || width == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if features.len() != labels.len() * width {
        return Err(Error::LengthMismatch {
            expected: labels.len() * width,
            got: features.len() / width.max(1),
        });
    }
    Ok(match &spec.kind {
        ClassifierKind::Knn { k_neighbors } => {
            if *k_neighbors == 0 {
                return Err(Error::InvalidClassifierSpec(
                    "k_neighbors must be at least 1".to_string(),
                ));
            }
            TrainedModel::Knn(KnnModel::fit(*k_neighbors, features, width, labels))
        }
        ClassifierKind::Tree {
            max_depth,
            min_leaf,
        } => {
            if *min_leaf == 0 {
                return Err(Error::InvalidClassifierSpec(
                    "min_leaf must be at least 1".to_string(),
                ));
            }
            TrainedModel::Tree(TreeModel::fit(
                *max_depth, *min_leaf, features, width, labels,
            ))
        }
        ClassifierKind::External { program } => {
            TrainedModel::External(ExternalModel::fit(program.clone(), features, width, labels))
        }
    })
}

/// Fits on a whole dataset.
pub fn train_dataset(spec: &ClassifierSpec, data: &Dataset) -> Result<TrainedModel> {
    train(spec, data.features(), data.n_cols(), data.labels())
}

/// Predicts one label per row of `queries`.
pub fn predict(model: &TrainedModel, queries: &[f64], width: usize) -> Result<Vec<u32>> {
    if width != model.width() {
        return Err(Error::FeatureWidthMismatch {
            model: model.width(),
            input: width,
        });
    }
    let n = queries.len() / width;
    match model {
        TrainedModel::Knn(m) => Ok((0..n)
            .map(|i| m.predict_one(&queries[i * width..(i + 1) * width]))
            .collect()),
        TrainedModel::Tree(m) => Ok((0..n)
            .map(|i| m.predict_one(&queries[i * width..(i + 1) * width]))
            .collect()),
        TrainedModel::External(m) => m.predict(queries),
    }
}

/// Fraction of mispredicted rows.
pub fn error_rate(
    model: &TrainedModel,
    test_features: &[f64],
    width: usize,
    test_labels: &[u32],
) -> Result<f64> {
    if test_labels.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let predictions = predict(model, test_features, width)?;
    let wrong = predictions
        .iter()
        .zip(test_labels)
        .filter(|(p, l)| p != l)
        .count();
    Ok(wrong as f64 / test_labels.len() as f64)
}

/// A random k-fold partition: every row is assigned one fold id in `1..=k`,
/// every fold is nonempty, and fold sizes differ by at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<u32>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidFoldCount(k));
        }
        if n < k {
            return Err(Error::TooFewRowsForFolds { n, k });
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = rng_from_seed(seed);
        // Fisher-Yates
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let base = n / k;
        let extra = n % k;
        let mut assignment = vec![0u32; n];
        let mut pos = 0usize;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            for _ in 0..size {
                assignment[order[pos]] = fold as u32 + 1;
                pos += 1;
            }
        }
        Ok(FoldPlan {
            k,
            assignment,
            seed,
        })
    }

    /// Row indices of the test fold `j` (1-based) and its complement.
    pub fn split(&self, fold: u32) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Averaged k-fold cross-validation error: the folds are a seeded plain
/// random partition (not stratified), each fold is held out once, and the k
/// per-fold error rates are averaged.
pub fn kfold_cv_error(
    spec: &ClassifierSpec,
    features: &[f64],
    width: usize,
    labels: &[u32],
    k: usize,
    seed: u64,
) -> Result<f64> {
    let n = labels.len();
    let plan = FoldPlan::random(n, k, seed)?;
    let mut total = 0.0;
    let mut train_f = Vec::new();
    let mut train_l = Vec::new();
    let mut test_f = Vec::new();
    let mut test_l = Vec::new();
    for fold in 1..=k as u32 {
        let (train_rows, test_rows) = plan.split(fold);
        gather(
            features,
            width,
            labels,
            &train_rows,
            &mut train_f,
            &mut train_l,
        );
        gather(
            features,
            width,
            labels,
            &test_rows,
            &mut test_f,
            &mut test_l,
        );
        let model = train(spec, &train_f, width, &train_l)?;
        total += error_rate(&model, &test_f, width, &test_l)?;
    }
    Ok(total / k as f64)
}

/// Convenience wrapper over a dataset.
pub fn kfold_cv_error_dataset(
    spec: &ClassifierSpec,
    data: &Dataset,
    k: usize,
    seed: u64,
) -> Result<f64> {
    kfold_cv_error(spec, data.features(), data.n_cols(), data.labels(), k, seed)
}

fn gather(
    features: &[f64],
    width: usize,
    labels: &[u32],
    rows: &[usize],
    out_f: &mut Vec<f64>,
    out_l: &mut Vec<u32>,
) {
    out_f.clear();
    out_l.clear();
    for &r in rows {
        out_f.extend_from_slice(&features[r * width..(r + 1) * width]);
        out_l.push(labels[r]);
    }
}
