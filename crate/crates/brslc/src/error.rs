//! Crate-wide error type.

use std::path::PathBuf;

/// Coarse classification of an error, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad arguments or a missing input file: the caller asked for something
    /// that cannot be attempted.
    Input,
    /// The inputs were readable but their content or size is unusable.
    Data,
    /// A classifier (built-in or external plugin) failed.
    Classifier,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),
    #[error("non-numeric feature cell at row {row}, column {column:?}: {value:?}")]
    NonNumericFeature {
        row: usize,
        column: String,
        value: String,
    },
    #[error("non-finite feature at row {row}, column {column:?}")]
    NonFiniteFeature { row: usize, column: String },
    #[error("missing label at row {row}")]
    MissingLabel { row: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has no feature columns")]
    NoFeatureColumns,
    #[error("labels are not contiguous class ids 1..=K (saw {0})")]
    NonContiguousLabels(u32),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty subset view")]
    EmptySubsetView,
    #[error("index {index} out of range for dataset of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid sampling config: {0}")]
    InvalidSamplingConfig(String),
    #[error("supplementary-draw cap exceeded: {uncovered} observation(s) still uncovered after {extra} extra subsets")]
    CoverageCapExceeded { uncovered: usize, extra: u64 },
    #[error("observation {0} has zero inclusion count")]
    UncoveredObservation(usize),

    #[error("empty subset has no label noise level")]
    EmptySubset,
    #[error("invalid oracle params: {0}")]
    InvalidOracleParams(String),
    #[error("insufficient replications: need at least {need}, got {got}")]
    InsufficientReplications { need: usize, got: usize },
    #[error("group {0:?} has fewer than 2 members")]
    GroupTooSmall(&'static str),
    #[error("all tilde_e values are zero; no-intercept fit is undefined")]
    AllZeroPredictor,
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value at position {0}")]
    NonFiniteValue(usize),
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },

    #[error("invalid classifier spec: {0}")]
    InvalidClassifierSpec(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("feature width mismatch: model has {model}, input has {input}")]
    FeatureWidthMismatch { model: usize, input: usize },
    #[error("cannot make {k} folds from {n} rows")]
    TooFewRowsForFolds { n: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("external classifier {program:?} exited with {status}: {stderr}")]
    PluginFailed {
        program: PathBuf,
        status: String,
        stderr: String,
    },
    #[error("external classifier {program:?} produced bad output: {reason}")]
    PluginBadOutput { program: PathBuf, reason: String },

    #[error("dataset too small: {n} rows, need at least {need}")]
    DatasetTooSmall { n: usize, need: usize },
    #[error("mask is required for this operation")]
    MissingMask,

    #[error("invalid setting id {0} (expected 1..=4)")]
    InvalidSettingId(u8),
    #[error("noise rate {0} out of range [0, 0.5)")]
    NoiseRateOutOfRange(f64),
    #[error("invalid generator spec: {0}")]
    InvalidSettingSpec(String),
}

impl Error {
    /// Which broad class this error belongs to. Front ends map categories to
    /// exit codes; the library only classifies.
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            MissingFile(_)
            | InvalidSamplingConfig(_)
            | InvalidOracleParams(_)
            | InvalidClassifierSpec(_)
            | InvalidFoldCount(_)
            | InvalidSettingId(_)
            | NoiseRateOutOfRange(_)
            | InvalidSettingSpec(_) => ErrorCategory::Input,
            PluginFailed { .. } | PluginBadOutput { .. } => ErrorCategory::Classifier,
            _ => ErrorCategory::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
