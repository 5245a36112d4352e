//! Command-line and config-file options. Every option struct doubles as the
//! config-file schema: keys are the long flag names.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "mdlasso",
    version,
    about = "Robust sparse regression with the minimum-distance Lasso"
)]
pub struct Cli {
    /// Treat solver non-convergence as a failure (exit 3).
    #[arg(long, global = true)]
    pub strict: bool,

    /// Print diagnostics to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one estimator to a CSV dataset and write a JSON model.
    Fit(FitArgs),
    /// Grid-search lambda (and c for md variants) on seeded splits.
    Tune(TuneArgs),
    /// Run the replicated simulation benchmark.
    Simulate(SimulateArgs),
    /// Evaluate the gradient, curvature and rate bounds for a noise law.
    Bounds(BoundsArgs),
    /// Rate factor as a function of c; same as `bounds --curve`.
    Curve(BoundsArgs),
    /// Bootstrap selection counts for the predictors chosen on the full data.
    Stability(StabilityArgs),
    /// Normal QQ-plot coordinates of a fitted model's residuals.
    Qqdata(QqArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DataOpts {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Response column name, or a zero-based index [default: y].
    #[arg(long)]
    pub response: Option<String>,

    /// Fit on the raw columns instead of centred and scaled ones.
    #[arg(long)]
    pub no_standardize: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EstimatorOpts {
    /// md_lasso, irw_md_lasso, lasso, lad_lasso, trimmed_lasso or extended_lasso [default: md_lasso].
    #[arg(long)]
    pub estimator: Option<String>,

    /// Scaling parameter of the md variants [default: 5].
    #[arg(long)]
    pub c: Option<f64>,

    /// Fraction of observations dropped by trimmed_lasso [default: 0.1].
    #[arg(long)]
    pub trim_fraction: Option<f64>,

    /// Penalty on the corruption vector; required by extended_lasso.
    #[arg(long)]
    pub lambda_error: Option<f64>,

    #[arg(long)]
    pub max_iterations: Option<usize>,

    #[arg(long)]
    pub rel_tolerance: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TuningOpts {
    /// Seed for the validation split [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of lambda values [default: 15].
    #[arg(long)]
    pub lambda_count: Option<usize>,

    /// Smallest lambda as a fraction of lambda_max [default: 0.01].
    #[arg(long)]
    pub lambda_min_ratio: Option<f64>,

    /// Fraction of rows held out for validation [default: 0.25].
    #[arg(long)]
    pub holdout_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FitArgs {
    /// JSON file of option values; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub tuning: TuningOpts,

    /// Penalty level; tuned on a holdout split when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Number of largest coefficients listed in the model [default: 10].
    #[arg(long)]
    pub top_k: Option<usize>,

    /// Model JSON path [default: stdout].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TuneArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub tuning: TuningOpts,

    /// Comma-separated c values to search (md variants only).
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,

    /// Use K-fold splits instead of a single holdout.
    #[arg(long)]
    pub folds: Option<usize>,

    /// Tuning report JSON path [default: stdout].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct StabilityArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub tuning: TuningOpts,

    /// Penalty level; tuned on a holdout split when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Number of bootstrap resamples [default: 100].
    #[arg(long)]
    pub bootstrap: Option<usize>,

    /// Counts CSV path [default: stdout].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct QqArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Data CSV with the model's columns.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Response column [default: the model's response].
    #[arg(long)]
    pub response: Option<String>,

    /// CSV path [default: stdout].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub p: Option<usize>,

    /// normal, laplace, gauss_mixture, student_t[:df] or cauchy.
    #[arg(long)]
    pub error: Option<String>,

    /// toeplitz or two_factor [default: toeplitz].
    #[arg(long)]
    pub design: Option<String>,

    /// Toeplitz correlation [default: 0.5].
    #[arg(long)]
    pub rho: Option<f64>,

    #[arg(long)]
    pub replications: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Comma-separated estimators with `:key=value` parameters, e.g.
    /// `md_lasso:c=5,lasso` [default: md_lasso:c=5,lasso].
    #[arg(long)]
    pub estimators: Option<String>,

    #[arg(long)]
    pub lambda_count: Option<usize>,

    #[arg(long)]
    pub lambda_min_ratio: Option<f64>,

    #[arg(long)]
    pub holdout_fraction: Option<f64>,

    /// Validation loss: own or absolute [default: own].
    #[arg(long)]
    pub validation: Option<String>,

    /// Add a wall-clock column to the records (not reproducible).
    #[arg(long)]
    pub record_timing: bool,

    /// Directory for records.csv and summary.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BoundsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Noise law, e.g. normal, laplace, cauchy, student_t:4.
    #[arg(long)]
    pub dist: Option<String>,

    #[arg(long)]
    pub c: Option<f64>,

    /// Truncation level of the tail-based gradient bound [default: sqrt(c)].
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Bound on the absolute predictor entries [default: 1].
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub predictor_bound: Option<f64>,

    /// Restricted eigenvalue of the design [default: 1].
    #[arg(long)]
    pub kappa_re: Option<f64>,

    /// Sparsity [default: 5].
    #[arg(long)]
    pub s: Option<usize>,

    /// Number of predictors [default: 1000].
    #[arg(long)]
    pub p: Option<usize>,

    /// Number of observations [default: 200].
    #[arg(long)]
    pub n: Option<usize>,

    /// lemma1 (tail-based) or lemma2 (second-moment) [default: lemma2 for
    /// finite-variance noise, else lemma1].
    #[arg(long)]
    pub which: Option<String>,

    /// Write the rate factor over --c-grid instead of a single report.
    #[arg(long)]
    pub curve: bool,

    /// Comma-separated c values for --curve [default: 5,10,...,200].
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,

    /// Report JSON (or curve CSV) path; the text report always goes to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}
