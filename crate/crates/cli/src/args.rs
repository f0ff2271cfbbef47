use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "xmlkit", version, about = "Train, evaluate and explain classifiers on the WDBC table")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a dataset as JSON.
    Inspect(Common),
    /// Fit one model and evaluate it on the held-out partitions.
    Train(Experiment),
    /// Like `train`, plus k-fold cross-validation on the training partition.
    Cv(Experiment),
    /// Grid search on the training partition, then train the best cell.
    Grid(GridArgs),
    /// Train, then explain test instances (Shapley values or LIME).
    Explain(Experiment),
    /// Render a plot from saved report files.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat TOML file whose keys mirror the long flags; flags win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// WDBC-format CSV file.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Write machine output here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Suppress the human-readable summary on standard error.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Experiment {
    #[command(flatten)]
    pub common: Common,
    /// Model family: logistic, sgd, tree, forest, gbt, knn, mlp.
    #[arg(long, value_name = "NAME")]
    pub model: Option<String>,
    /// Bundled protocol: paper-ann, paper-dt-grid, paper-rf-grid, paper-knn-sweep.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Partition ratios, train:test[:validation].
    #[arg(long, value_name = "A:B[:C]")]
    pub split: Option<String>,
    /// Master seed; falls back to XMLKIT_SEED, then 0.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Folds for cross-validation, grid search and the k sweep.
    #[arg(long, value_name = "N")]
    pub k: Option<usize>,
    /// Neighbour count for the knn model.
    #[arg(long, value_name = "N")]
    pub neighbors: Option<usize>,
    /// Model setting, e.g. `max_depth=5` or `train.epochs=50`. Repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Also sweep knn k over 1..=N.
    #[arg(long, value_name = "N")]
    pub sweep: Option<usize>,
    /// Explanation method: shap-exact, shap-mc, lime.
    #[arg(long, value_name = "METHOD")]
    pub explain: Option<String>,
    /// Test instances to explain.
    #[arg(long, value_name = "N")]
    pub instances: Option<usize>,
    /// Background rows for Shapley values.
    #[arg(long, value_name = "N")]
    pub background: Option<usize>,
    /// Permutations for shap-mc.
    #[arg(long, value_name = "N")]
    pub permutations: Option<usize>,
    /// Attribute in probability or logit space.
    #[arg(long, value_name = "probability|logit")]
    pub link: Option<String>,
    /// LIME kernel width (default 0.75 * sqrt(features)).
    #[arg(long, value_name = "W")]
    pub kernel_width: Option<f64>,
    /// LIME perturbation samples.
    #[arg(long, value_name = "N")]
    pub samples: Option<usize>,
    /// Also render this plot next to the report (needs --out).
    #[arg(long, value_name = "KIND")]
    pub plot: Option<String>,
    /// Leave the fitted parameters out of the report.
    #[arg(long)]
    pub no_model: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub experiment: Experiment,
    /// Grid axis, e.g. `max_depth=none,10,20`. Repeatable; replaces a preset grid.
    #[arg(long = "grid", value_name = "KEY=V1,V2,...")]
    pub axes: Vec<String>,
    /// Grid scoring: accuracy or roc-auc.
    #[arg(long, value_name = "NAME")]
    pub scoring: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Report JSON files. bar-compare uses all of them, other kinds the first.
    #[arg(required = true, value_name = "REPORT")]
    pub reports: Vec<PathBuf>,
    /// force, waterfall, summary, importance, bar-compare, knn-curve, lime.
    #[arg(long, value_name = "KIND")]
    pub plot: String,
    /// Explained instance shown by force, waterfall and lime plots.
    #[arg(long, default_value_t = 0)]
    pub instance: usize,
    /// Features shown before the rest are folded together.
    #[arg(long, default_value_t = 10)]
    pub max_features: usize,
    /// Summary-plot jitter seed (default: the report's master seed).
    #[arg(long)]
    pub jitter_seed: Option<u64>,
    /// SVG path; the plot data is written next to it with a .json extension.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub quiet: bool,
}
