//! Command-line definitions and config-file resolution.
//!
//! Every tunable flag may also come from a JSON config file (`--config`);
//! explicit flags win over file values, which win over built-in defaults.
//! The fully resolved configuration is echoed into every output artifact.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(
    name = "brslc",
    version,
    about = "Label noise cleaning via Bernoulli random subset sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic noisy training set, a clean test set, and the
    /// ground-truth noise mask.
    Simulate(SimulateArgs),
    /// Run the stepwise cleaning loop on a CSV dataset.
    Clean(CleanArgs),
    /// Verify the distributional claims on a noise mask: mean noise levels,
    /// the independent coupling, and the theoretical mean gap.
    Theory(TheoryArgs),
    /// Score a cleaning report against the ground truth and a clean test set.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed for all randomness.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for output artifacts.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for parallel subset evaluation (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Force ordered reductions. Accumulation in this implementation is
    /// always ordered and bit-reproducible; the flag is accepted so configs
    /// can state the requirement explicitly.
    #[arg(long)]
    pub deterministic: bool,
    /// Print the fully resolved configuration as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Synthetic setting id (1-4).
    #[arg(long)]
    pub setting: Option<u8>,
    /// Training set size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fraction of labels to flip, in [0, 0.5).
    #[arg(long)]
    pub noise_rate: Option<f64>,
    /// Clean test set size.
    #[arg(long)]
    pub n_test: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CleanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Input dataset CSV (headered; one label column).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the label column.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Optional ground-truth noise mask CSV; when present, cleaning metrics
    /// are embedded in the report.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Classifier: knn[:K], tree[:MAX_DEPTH[,MIN_LEAF]], or external:<path>.
    #[arg(long)]
    pub classifier: Option<String>,
    /// Subset inclusion probability in (0, 1).
    #[arg(long)]
    pub q: Option<f64>,
    /// Number of Bernoulli subsets per iteration.
    #[arg(long)]
    pub m_subsets: Option<u64>,
    /// Folds for cross-validation.
    #[arg(long)]
    pub k_folds: Option<usize>,
    /// Subsets smaller than this are skipped (still count toward M).
    #[arg(long)]
    pub min_subset_size: Option<usize>,
    /// Iteration cap for the cleaning loop.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// z-score features per column before cleaning (never done implicitly).
    #[arg(long)]
    pub standardize: bool,
    /// Also write one mean-CV-error histogram TSV per accepted iteration.
    #[arg(long)]
    pub emit_histograms: bool,
}

#[derive(Args, Debug)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ground-truth noise mask CSV. Alternatively give --n and --noise-rate
    /// to synthesize a mask.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Synthesize a mask of this size (with --noise-rate).
    #[arg(long)]
    pub n: Option<usize>,
    /// Noisy fraction for the synthesized mask.
    #[arg(long)]
    pub noise_rate: Option<f64>,
    /// Subset inclusion probability in (0, 1).
    #[arg(long)]
    pub q: Option<f64>,
    /// Number of Bernoulli subsets.
    #[arg(long)]
    pub m_subsets: Option<u64>,
    /// Histogram bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Also compute the independent coupling and its histogram.
    #[arg(long)]
    pub coupled: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Original (noisy) training CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the label column.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Ground-truth noise mask CSV.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Cleaning report JSON (for its cleaned_indices).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Clean test set CSV.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Classifier for the before/after test errors.
    #[arg(long)]
    pub classifier: Option<String>,
    /// z-score features per column before training.
    #[arg(long)]
    pub standardize: bool,
}

/// A loaded config file (empty object when none was given).
pub struct FileConfig {
    values: Value,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let values = match path {
            None => Value::Object(Default::default()),
            Some(path) => {
                if !path.exists() {
                    return Err(CliError::Usage(format!("config file not found: {path:?}")));
                }
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Data(format!("cannot read {path:?}: {e}")))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Data(format!("bad JSON in {path:?}: {e}")))?
            }
        };
        Ok(FileConfig { values })
    }

    /// flag > config file > default.
    pub fn resolve<T: DeserializeOwned>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(default),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| CliError::Usage(format!("config key {key:?}: {e}"))),
        }
    }

    /// Like [`resolve`] but with no default: `None` when absent everywhere.
    pub fn resolve_opt<T: DeserializeOwned>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key {key:?}: {e}"))),
        }
    }
}

/// CLI-level error with an exit code. Exit codes: 0 ok, 2 usage, 3 data
/// error, 4 classifier/plugin error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Classifier(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Classifier(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Classifier(m) => m,
        }
    }
}

impl From<brslc::error::Error> for CliError {
    fn from(err: brslc::error::Error) -> Self {
        use brslc::error::{Error, ErrorCategory};
        let message = err.to_string();
        match &err {
            // A missing input file is a bad argument, not bad data.
            Error::MissingFile(_) => CliError::Usage(message),
            _ => match err.category() {
                ErrorCategory::Input => CliError::Usage(message),
                ErrorCategory::Data => CliError::Data(message),
                ErrorCategory::Classifier => CliError::Classifier(message),
            },
        }
    }
}
