use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ingest::{CodClass, SplitStrategy};
use crate::ppi::LambdaMode;
use crate::simulate::NoiseModel;
use crate::text::{PredictorKind, UnclassifiedPolicy};

#[derive(Debug, Parser)]
#[command(name = "multippi", version, about = "Prediction-powered multinomial logistic inference for verbal-autopsy causes of death")]
pub struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate records; report counts and the labeled split.
    Ingest(IngestArgs),
    /// Train (or load) a text predictor and predict causes.
    Predict(PredictArgs),
    /// Fit ground-truth, classical, naive and multiPPI++ on one dataset.
    Infer(InferArgs),
    /// Leave-one-site-out evaluation.
    Loso(LosoArgs),
    /// Synthetic coverage experiment.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Records CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Column bindings such as `age=age,cause=`; applied after --config.
    #[arg(long)]
    pub columns: Option<String>,
    /// TOML ingest configuration with [columns] and [split] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed (default: the config file's split seed, else 0).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitArg {
    /// Simple random sample of rows.
    Full,
    /// Random sample within each true cause.
    Stratified,
}

impl From<SplitArg> for SplitStrategy {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Full => SplitStrategy::FullRandom,
            SplitArg::Stratified => SplitStrategy::StratifiedByCause,
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Fraction of rows that keep their true label.
    #[arg(long)]
    pub labeled_fraction: Option<f64>,
}

/// `nb`, `knn`, `svm` or `external:<path>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub enum PredictorChoice {
    Builtin(PredictorKind),
    External(PathBuf),
}

impl From<PredictorChoice> for String {
    fn from(p: PredictorChoice) -> String {
        match p {
            PredictorChoice::Builtin(k) => k.provenance().to_string(),
            PredictorChoice::External(path) => format!("external:{}", path.display()),
        }
    }
}

impl FromStr for PredictorChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(path) = s.strip_prefix("external:") {
            if path.is_empty() {
                return Err("external predictor needs a path: external:<file>".into());
            }
            return Ok(PredictorChoice::External(PathBuf::from(path)));
        }
        s.parse::<PredictorKind>()
            .map(PredictorChoice::Builtin)
            .map_err(|_| format!("unknown predictor `{s}`; expected nb, knn, svm or external:<path>"))
    }
}

#[derive(Debug, Args)]
pub struct PredictorArgs {
    /// nb, knn, svm or external:<path>.
    #[arg(long)]
    pub predictor: Option<PredictorChoice>,
    /// Handling of `unclassified` predictions: drop, impute-majority, keep-as-error.
    #[arg(long, default_value = "drop")]
    pub unclassified: UnclassifiedPolicy,
    /// Minimum corpus frequency of a vocabulary token.
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
    /// Naive Bayes additive smoothing.
    #[arg(long, default_value_t = 1.0)]
    pub nb_alpha: f64,
    /// Neighbours for KNN.
    #[arg(long, default_value_t = crate::text::DEFAULT_K)]
    pub knn_k: usize,
    /// SVM regularization constant.
    #[arg(long, default_value_t = 1.0)]
    pub svm_c: f64,
    /// SVM passes over the training set.
    #[arg(long, default_value_t = 20)]
    pub svm_epochs: usize,
}

#[derive(Debug, Args)]
pub struct EstimatorArgs {
    /// `tuned` or a fixed value in [0, 1].
    #[arg(long, default_value = "tuned")]
    pub lambda: LambdaMode,
    /// Interval miscoverage level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Reference class of the multinomial model.
    #[arg(long, default_value = "non-communicable")]
    pub reference_class: CodClass,
    /// z-standardize age with pooled moments.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// Load a saved model instead of training.
    #[arg(long, conflicts_with = "predictor")]
    pub model: Option<PathBuf>,
    /// Predict records of this file (same column bindings) instead of the input.
    #[arg(long, conflicts_with = "holdout_site")]
    pub eval_input: Option<PathBuf>,
    /// Train on every other site and predict this one.
    #[arg(long)]
    pub holdout_site: Option<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    /// Predict with a saved model.
    #[arg(long, conflicts_with = "predictor")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Also write fixed-lambda fits on the grid 0, step, ..., 1.
    #[arg(long)]
    pub sweep_step: Option<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct LosoArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub predictor: PredictorArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Held-out sites to run, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    pub sites: Option<Vec<String>>,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Label noise: identity, uniform, diagonal:<acc>, asymmetric:<acc>:<sink>.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum NoiseArg {
    Identity,
    Uniform,
    Diagonal { accuracy: f64 },
    Asymmetric { accuracy: f64, sink: usize },
}

impl NoiseArg {
    pub fn build(self, k: usize) -> crate::Result<NoiseModel> {
        match self {
            NoiseArg::Identity => Ok(NoiseModel::identity(k)),
            NoiseArg::Uniform => Ok(NoiseModel::uniform(k)),
            NoiseArg::Diagonal { accuracy } => NoiseModel::diagonal(k, accuracy),
            NoiseArg::Asymmetric { accuracy, sink } => NoiseModel::asymmetric(k, accuracy, sink),
        }
    }
}

impl FromStr for NoiseArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad accuracy `{v}` in noise `{s}`"));
        match parts.as_slice() {
            ["identity"] => Ok(NoiseArg::Identity),
            ["uniform"] => Ok(NoiseArg::Uniform),
            ["diagonal", a] => Ok(NoiseArg::Diagonal { accuracy: num(a)? }),
            ["asymmetric", a, k] => Ok(NoiseArg::Asymmetric {
                accuracy: num(a)?,
                sink: k.parse().map_err(|_| format!("bad sink class `{k}` in noise `{s}`"))?,
            }),
            _ => Err(format!("unknown noise `{s}`; expected identity, uniform, diagonal:<acc> or asymmetric:<acc>:<sink>")),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of classes K.
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Design width d including the intercept.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// True coefficients, (K-1)*d values block by block.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 200)]
    pub n_labeled: usize,
    #[arg(long, default_value_t = 800)]
    pub n_unlabeled: usize,
    /// Mean of every non-intercept covariate.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub covariate_mean: f64,
    /// Standard deviation of every non-intercept covariate.
    #[arg(long, default_value_t = 1.0)]
    pub covariate_sd: f64,
    #[arg(long, default_value = "asymmetric:0.6:0")]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 1000)]
    pub replications: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// `tuned` or a fixed value in [0, 1].
    #[arg(long, default_value = "tuned")]
    pub lambda: LambdaMode,
    /// Write every replication's estimates and intervals.
    #[arg(long)]
    pub dump_replications: bool,
    /// Write replication 0 as a records CSV plus a predictions file (d = 2 only).
    #[arg(long)]
    pub dump_dataset: bool,
    #[command(flatten)]
    pub out: OutArgs,
}
