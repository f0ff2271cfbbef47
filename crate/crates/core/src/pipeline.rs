//! Experiment orchestration: model specifications, cross-validation, grid
//! search and the end-to-end run that produces an [`ExperimentReport`].
//!
//! One master seed drives a run. Each stage takes its own sub-seed:
//!
//! | index | stage |
//! |-------|-------|
//! | 0 | train/test(/validation) split |
//! | 1 | model fitting |
//! | 2 | cross-validation folds |
//! | 3 | grid-search folds |
//! | 4 | KNN k-sweep folds |
//! | 5 | SHAP background sample |
//! | 6 | explanation sampling (instance `i` uses a further `derive(i)`) |

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::data::{Dataset, Predictor};
use crate::dataset::{fit_minmax, stratified_kfold, stratified_split, SplitSpec};
use crate::ensemble::{fit_forest, train_gbt, ForestConfig, ForestModel, GbtConfig, GbtModel};
use crate::error::{Error, Result};
use crate::knn::{sweep_k, KSweep, KnnModel};
use crate::lime::{fit_surrogate, LimeConfig, LimeExplanation, TrainStats};
use crate::linear::{train_logistic, BatchSize, LinearTrainConfig, LogisticModel};
use crate::metrics::{evaluate, roc_auc, ConfusionMatrix, MetricsReport};
use crate::mlp::{init_network, train_mlp, Activation, Network, TrainConfig};
use crate::rng::{RngSeed, RNG_ALGORITHM};
use crate::shap::{
    global_importance, shapley_exact, shapley_permutation, Attribution, BackgroundSet, GlobalImportance, Link,
};
use crate::tree::{fit_tree, Criterion, TreeConfig, TreeModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// Hidden layer widths; input and output sizes come from the data.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub train: TrainConfig,
}

/// A model family together with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Logistic(LinearTrainConfig),
    SgdLogistic(LinearTrainConfig),
    Tree(TreeConfig),
    Forest(ForestConfig),
    Gbt(GbtConfig),
    Knn { k: usize },
    Mlp(MlpSpec),
}

impl ModelSpec {
    /// Default configuration for a family name. These are the settings used
    /// by the bundled presets; see the README for how they were chosen.
    pub fn named(name: &str) -> Result<Self> {
        Ok(match name {
            "logistic" | "logistic_regression" => {
                ModelSpec::Logistic(LinearTrainConfig { learning_rate: 1.0, epochs: 1000, ..Default::default() })
            }
            "sgd" | "sgd_logistic" => ModelSpec::SgdLogistic(LinearTrainConfig {
                learning_rate: 0.1,
                epochs: 200,
                batch_size: BatchSize::Mini(32),
                ..Default::default()
            }),
            "tree" | "decision_tree" => {
                ModelSpec::Tree(TreeConfig { criterion: Criterion::Entropy, max_depth: Some(10), min_samples_leaf: 10 })
            }
            "forest" | "random_forest" => ModelSpec::Forest(ForestConfig::default()),
            "gbt" | "xgboost" => ModelSpec::Gbt(GbtConfig::default()),
            "knn" => ModelSpec::Knn { k: 4 },
            "mlp" | "ann" => ModelSpec::Mlp(MlpSpec {
                hidden: vec![30, 30],
                activation: Activation::Relu,
                train: TrainConfig::default(),
            }),
            _ => return Err(Error::config(format!("unknown model family {name:?}"))),
        })
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Logistic(_) => "logistic",
            ModelSpec::SgdLogistic(_) => "sgd_logistic",
            ModelSpec::Tree(_) => "tree",
            ModelSpec::Forest(_) => "forest",
            ModelSpec::Gbt(_) => "gbt",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Mlp(_) => "mlp",
        }
    }

    /// Human-readable name used in reports and plots.
    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Logistic(_) => "logistic regression",
            ModelSpec::SgdLogistic(_) => "SGD logistic regression",
            ModelSpec::Tree(_) => "decision tree",
            ModelSpec::Forest(_) => "random forest",
            ModelSpec::Gbt(_) => "gradient-boosted trees (XGBoost stand-in)",
            ModelSpec::Knn { .. } => "k-nearest neighbours",
            ModelSpec::Mlp(_) => "neural network",
        }
    }

    /// Replaces the seed of stochastic families; deterministic families are
    /// returned unchanged.
    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        match &mut self {
            ModelSpec::Logistic(c) | ModelSpec::SgdLogistic(c) => c.seed = seed,
            ModelSpec::Forest(c) => c.seed = seed,
            ModelSpec::Mlp(m) => m.train.seed = seed,
            ModelSpec::Tree(_) | ModelSpec::Gbt(_) | ModelSpec::Knn { .. } => {}
        }
        self
    }

    /// Sets one configuration field by name. Names are the JSON field names
    /// of the configuration; fields of a nested `tree` or `train` section can
    /// be given bare (`max_depth`) or dotted (`tree.max_depth`). The string
    /// `"none"` stands for null, e.g. unlimited depth.
    pub fn set_param(&mut self, name: &str, value: &Value) -> Result<()> {
        if name == "family" {
            return Err(Error::config("the model family cannot be set as a parameter"));
        }
        let mut doc = serde_json::to_value(&*self)?;
        let root = doc.as_object_mut().expect("model specs serialize as objects");
        let slot = find_slot(root, name)
            .ok_or_else(|| Error::config(format!("{} has no parameter {name:?}", self.family())))?;
        *slot = match value {
            Value::String(s) if s.eq_ignore_ascii_case("none") => Value::Null,
            v => v.clone(),
        };
        *self = serde_json::from_value(doc).map_err(|e| Error::config(format!("parameter {name:?}: {e}")))?;
        Ok(())
    }

    pub fn fit(&self, train: &Dataset, validation: Option<&Dataset>) -> Result<Fitted> {
        let plain = |model| Fitted { model, loss_history: Vec::new(), validation_loss: Vec::new(), best_epoch: None };
        Ok(match self {
            ModelSpec::Logistic(c) | ModelSpec::SgdLogistic(c) => {
                let f = train_logistic(train, c)?;
                Fitted { loss_history: f.loss_history, ..plain(TrainedModel::Logistic(f.model)) }
            }
            ModelSpec::Tree(c) => plain(TrainedModel::Tree(fit_tree(train, c)?)),
            ModelSpec::Forest(c) => plain(TrainedModel::Forest(fit_forest(train, c)?)),
            ModelSpec::Gbt(c) => {
                let f = train_gbt(train, c)?;
                Fitted { loss_history: f.loss_history, ..plain(TrainedModel::Gbt(f.model)) }
            }
            ModelSpec::Knn { k } => plain(TrainedModel::Knn(KnnModel::fit(train, *k)?)),
            ModelSpec::Mlp(m) => {
                let mut sizes = vec![train.n_features()];
                sizes.extend(&m.hidden);
                sizes.push(1);
                let net = init_network(&sizes, m.activation, m.train.seed.derive(0))?;
                let cfg = TrainConfig { seed: m.train.seed.derive(1), ..m.train.clone() };
                let (net, h) = train_mlp(net, train, validation, &cfg)?;
                Fitted {
                    model: TrainedModel::Mlp(net),
                    loss_history: h.train_loss,
                    validation_loss: h.val_loss,
                    best_epoch: h.best_epoch,
                }
            }
        })
    }
}

fn find_slot<'a>(obj: &'a mut Map<String, Value>, name: &str) -> Option<&'a mut Value> {
    if let Some((head, rest)) = name.split_once('.') {
        return find_slot(obj.get_mut(head)?.as_object_mut()?, rest);
    }
    if obj.contains_key(name) {
        return obj.get_mut(name);
    }
    let section = ["tree", "train"]
        .into_iter()
        .find(|s| obj.get(*s).and_then(Value::as_object).is_some_and(|o| o.contains_key(name)))?;
    obj.get_mut(section)?.as_object_mut()?.get_mut(name)
}

/// A fitted model of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Gbt(GbtModel),
    Knn(KnnModel),
    Mlp(Network),
}

impl TrainedModel {
    fn inner(&self) -> &dyn Predictor {
        match self {
            TrainedModel::Logistic(m) => m,
            TrainedModel::Tree(m) => m,
            TrainedModel::Forest(m) => m,
            TrainedModel::Gbt(m) => m,
            TrainedModel::Knn(m) => m,
            TrainedModel::Mlp(m) => m,
        }
    }
}

impl Predictor for TrainedModel {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        self.inner().proba(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub model: TrainedModel,
    pub loss_history: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Accuracy,
    RocAuc,
}

impl Scoring {
    fn score(self, y: &[u8], proba: &[f64]) -> Result<f64> {
        match self {
            Scoring::Accuracy => Ok(evaluate(y, proba)?.1.accuracy),
            Scoring::RocAuc => roc_auc(y, proba),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub scoring: Scoring,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the fold scores.
    pub std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (mean, (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Stratified k-fold accuracy; see [`cross_validate_scored`].
pub fn cross_validate(d: &Dataset, spec: &ModelSpec, k: usize, seed: RngSeed) -> Result<CvResult> {
    cross_validate_scored(d, spec, k, seed, Scoring::Accuracy)
}

/// Folds come from `seed.derive(0)`; fold `f` fits the model with seed
/// `seed.derive(f + 1)`. Each fold fits its own Min-Max scaler on its
/// training part only.
pub fn cross_validate_scored(
    d: &Dataset,
    spec: &ModelSpec,
    k: usize,
    seed: RngSeed,
    scoring: Scoring,
) -> Result<CvResult> {
    let folds = stratified_kfold(d, k, seed.derive(0))?;
    let run_fold = |fold: usize| -> Result<f64> {
        let (train_idx, test_idx) = folds.split(fold);
        let train = d.subset(&train_idx)?;
        let test = d.subset(&test_idx)?;
        let scaler = fit_minmax(&train.x);
        let train = scaler.apply_dataset(&train)?;
        let test = scaler.apply_dataset(&test)?;
        let fitted = spec.clone().with_seed(seed.derive(fold as u64 + 1)).fit(&train, None)?;
        let proba = fitted.model.proba_rows(&test.x)?;
        scoring.score(test.y.as_slice(), &proba)
    };
    #[cfg(feature = "parallel")]
    let fold_scores = {
        use rayon::prelude::*;
        (0..k).into_par_iter().map(run_fold).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let fold_scores = (0..k).map(run_fold).collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&fold_scores);
    Ok(CvResult { scoring, fold_scores, mean, std })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub parameters: Vec<GridAxis>,
    #[serde(default)]
    pub scoring: Scoring,
}

impl GridSpec {
    pub fn new(scoring: Scoring) -> Self {
        GridSpec { parameters: Vec::new(), scoring }
    }

    pub fn axis(mut self, name: &str, values: Vec<Value>) -> Self {
        self.parameters.push(GridAxis { name: name.to_string(), values });
        self
    }

    /// Cells in declaration order: the last axis varies fastest.
    pub fn cells(&self) -> Result<Vec<Vec<(String, Value)>>> {
        if self.parameters.is_empty() || self.parameters.iter().any(|a| a.values.is_empty()) {
            return Err(Error::config("grid needs at least one parameter and one value per parameter"));
        }
        let mut cells = vec![Vec::new()];
        for axis in &self.parameters {
            cells = cells
                .into_iter()
                .flat_map(|cell: Vec<(String, Value)>| {
                    axis.values.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.push((axis.name.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridParam {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub params: Vec<GridParam>,
    pub cv: CvResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub scoring: Scoring,
    pub folds: usize,
    pub cells: Vec<GridCell>,
    /// Index of the winning cell: highest mean score, earliest on ties.
    pub best: usize,
    pub best_spec: ModelSpec,
}

impl GridResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Exhaustive grid search. Every cell is cross-validated on the same folds.
pub fn grid_search(d: &Dataset, base: &ModelSpec, grid: &GridSpec, k: usize, seed: RngSeed) -> Result<GridResult> {
    let specs = grid
        .cells()?
        .into_iter()
        .map(|cell| {
            let mut spec = base.clone();
            for (name, value) in &cell {
                spec.set_param(name, value)?;
            }
            let params = cell.into_iter().map(|(name, value)| GridParam { name, value }).collect();
            Ok((params, spec))
        })
        .collect::<Result<Vec<(Vec<GridParam>, ModelSpec)>>>()?;
    let run = |(params, spec): &(Vec<GridParam>, ModelSpec)| -> Result<GridCell> {
        let cv = cross_validate_scored(d, spec, k, seed, grid.scoring)?;
        Ok(GridCell { params: params.clone(), cv })
    };
    #[cfg(feature = "parallel")]
    let cells = {
        use rayon::prelude::*;
        specs.par_iter().map(run).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let cells = specs.iter().map(run).collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.cv.mean > cells[best].cv.mean {
            best = i;
        }
    }
    Ok(GridResult { scoring: grid.scoring, folds: k, cells, best, best_spec: specs[best].1.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplainMethod {
    ShapExact,
    ShapMc,
    Lime,
}

impl std::str::FromStr for ExplainMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shap-exact" => Ok(ExplainMethod::ShapExact),
            "shap-mc" => Ok(ExplainMethod::ShapMc),
            "lime" => Ok(ExplainMethod::Lime),
            _ => Err(Error::config(format!("unknown explanation method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub method: ExplainMethod,
    /// Test instances to explain.
    pub instances: usize,
    /// Background rows sampled from the scaled training set.
    pub background: usize,
    pub permutations: usize,
    #[serde(default)]
    pub link: Link,
    /// LIME settings; the seed is replaced per instance.
    pub lime: LimeConfig,
}

impl ExplainConfig {
    pub fn new(method: ExplainMethod) -> Self {
        ExplainConfig {
            method,
            instances: 5,
            background: 100,
            permutations: 200,
            link: Link::Probability,
            lime: LimeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k_max: usize,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// `train:test` or `train:test:validation`.
    pub split: String,
    pub seed: RngSeed,
    /// Folds used by cross-validation and grid search.
    pub folds: usize,
    /// Cross-validate the model on the training partition.
    #[serde(default)]
    pub cross_validate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knn_sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain: Option<ExplainConfig>,
    /// Embed the fitted parameters in the report.
    pub include_model: bool,
}

/// Names accepted by [`ExperimentConfig::preset`].
pub const PRESETS: [&str; 4] = ["paper-ann", "paper-dt-grid", "paper-rf-grid", "paper-knn-sweep"];

fn values<T: Serialize>(xs: &[T]) -> Vec<Value> {
    xs.iter().map(|x| serde_json::to_value(x).expect("plain values serialize")).collect()
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, split: &str, seed: RngSeed) -> Self {
        ExperimentConfig {
            model,
            split: split.to_string(),
            seed,
            folds: 5,
            cross_validate: false,
            grid: None,
            knn_sweep: None,
            explain: None,
            include_model: true,
        }
    }

    /// The bundled protocols:
    ///
    /// * `paper-ann`: 7:2:1 split, two hidden layers of 30 relu units, Adam
    ///   at 0.001, 200 epochs, batch 32.
    /// * `paper-dt-grid`: 7:3 split, decision tree tuned over criterion,
    ///   depth {10, 20, 50, 100, 200} and leaf size {5, 10, 20, 50, 100} by
    ///   ROC AUC.
    /// * `paper-rf-grid`: 7:3 split, forest tuned over depth {none, 10, 20,
    ///   50, 100}, trees {10, 20, 30, 50, 100} and leaf size {1, 5, 10, 20,
    ///   50} by ROC AUC.
    /// * `paper-knn-sweep`: 7:3 split, k = 4, plus a 5-fold sweep of k over
    ///   1..=20.
    pub fn preset(name: &str, seed: RngSeed) -> Result<Self> {
        Ok(match name {
            "paper-ann" => ExperimentConfig::new(ModelSpec::named("mlp")?, "7:2:1", seed),
            "paper-dt-grid" => ExperimentConfig {
                grid: Some(
                    GridSpec::new(Scoring::RocAuc)
                        .axis("criterion", values(&["gini", "entropy"]))
                        .axis("max_depth", values(&[10, 20, 50, 100, 200]))
                        .axis("min_samples_leaf", values(&[5, 10, 20, 50, 100])),
                ),
                cross_validate: true,
                ..ExperimentConfig::new(ModelSpec::named("tree")?, "7:3", seed)
            },
            "paper-rf-grid" => ExperimentConfig {
                grid: Some(
                    GridSpec::new(Scoring::RocAuc)
                        .axis("max_depth", vec![Value::Null, 10.into(), 20.into(), 50.into(), 100.into()])
                        .axis("n_estimators", values(&[10, 20, 30, 50, 100]))
                        .axis("min_samples_leaf", values(&[1, 5, 10, 20, 50])),
                ),
                cross_validate: true,
                include_model: false,
                ..ExperimentConfig::new(ModelSpec::named("forest")?, "7:3", seed)
            },
            "paper-knn-sweep" => ExperimentConfig {
                knn_sweep: Some(SweepConfig { k_max: 20, folds: 5 }),
                cross_validate: true,
                ..ExperimentConfig::new(ModelSpec::named("knn")?, "7:3", seed)
            },
            _ => return Err(Error::config(format!("unknown preset {name:?}; expected one of {PRESETS:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub cols: usize,
    pub benign: usize,
    pub malignant: usize,
    /// SHA-256 over feature names, values (little-endian f64) and labels.
    pub sha256: String,
}

pub fn fingerprint(d: &Dataset) -> DatasetFingerprint {
    let mut h = Sha256::new();
    for name in d.x.feature_names() {
        h.update(name.as_bytes());
        h.update([0]);
    }
    for v in d.x.values() {
        h.update(v.to_le_bytes());
    }
    h.update(d.y.as_slice());
    let sha256 = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let (benign, malignant) = d.y.class_counts();
    DatasetFingerprint { rows: d.len(), cols: d.n_features(), benign, malignant, sha256 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub split: RngSeed,
    pub model: RngSeed,
    pub cross_validation: RngSeed,
    pub grid: RngSeed,
    pub knn_sweep: RngSeed,
    pub background: RngSeed,
    pub explanation: RngSeed,
}

impl SeedRecord {
    pub fn from_master(m: RngSeed) -> Self {
        SeedRecord {
            split: m.derive(0),
            model: m.derive(1),
            cross_validation: m.derive(2),
            grid: m.derive(3),
            knn_sweep: m.derive(4),
            background: m.derive(5),
            explanation: m.derive(6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub samples: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
}

pub fn evaluate_model<P: Predictor + ?Sized>(model: &P, d: &Dataset) -> Result<EvalRecord> {
    let proba = model.proba_rows(&d.x)?;
    let (confusion, metrics) = evaluate(d.y.as_slice(), &proba)?;
    Ok(EvalRecord { samples: d.len(), confusion, metrics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSet {
    pub train: EvalRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<EvalRecord>,
    pub test: EvalRecord,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingRecord {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validation_loss: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub method: ExplainMethod,
    /// Row indices in the loaded dataset of the explained test instances.
    pub instances: Vec<usize>,
    pub link: Link,
    pub background_size: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shap: Vec<Attribution>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lime: Vec<LimeExplanation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_importance: Option<GlobalImportance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub toolkit: String,
    pub version: String,
    pub rng_algorithm: String,
    pub master_seed: RngSeed,
    pub seeds: SeedRecord,
    pub dataset: DatasetFingerprint,
    pub split: SplitSpec,
    /// Sizes in split declaration order (train, test[, validation]).
    pub partition_sizes: Vec<usize>,
    pub model_label: String,
    /// Conventions that shape the numbers below.
    pub conventions: Vec<String>,
    /// Final model configuration, after any grid search.
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trained_model: Option<TrainedModel>,
    pub training: TrainingRecord,
    pub metrics: MetricsSet,
    /// Test-set confusion matrix.
    pub confusion_matrix: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_validation: Option<CvResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knn_sweep: Option<KSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanations: Option<ExplanationRecord>,
}

impl ExperimentReport {
    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Up to `n` positions, alternating predicted class 1 and class 0 in index
/// order, topped up from whichever class remains.
pub fn select_instances(predictions: &[u8], n: usize) -> Vec<usize> {
    let pos: Vec<usize> = (0..predictions.len()).filter(|&i| predictions[i] == 1).collect();
    let neg: Vec<usize> = (0..predictions.len()).filter(|&i| predictions[i] == 0).collect();
    let mut out = Vec::with_capacity(n.min(predictions.len()));
    let (mut a, mut b) = (pos.into_iter(), neg.into_iter());
    while out.len() < n {
        match (a.next(), b.next()) {
            (None, None) => break,
            (x, y) => {
                out.extend(x);
                if out.len() < n {
                    out.extend(y);
                }
            }
        }
    }
    out
}

/// Runs a full experiment on an already loaded dataset.
pub fn run_experiment(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentReport> {
    let seeds = SeedRecord::from_master(cfg.seed);
    let split = SplitSpec::parse(&cfg.split, seeds.split).map_err(Error::in_stage("split"))?;
    let idx = crate::dataset::stratified_split_indices(data, &split).map_err(Error::in_stage("split"))?;
    let parts = stratified_split(data, &split).map_err(Error::in_stage("split"))?;
    let (train_raw, test_raw, val_raw) = (&parts[0], &parts[1], parts.get(2));

    let mut spec = cfg.model.clone();
    let grid = match &cfg.grid {
        Some(g) => {
            let r = grid_search(train_raw, &spec, g, cfg.folds, seeds.grid).map_err(Error::in_stage("grid search"))?;
            spec = r.best_spec.clone();
            Some(r)
        }
        None => None,
    };
    let cross_validation = if cfg.cross_validate {
        Some(
            cross_validate(train_raw, &spec, cfg.folds, seeds.cross_validation)
                .map_err(Error::in_stage("cross-validation"))?,
        )
    } else {
        None
    };
    let knn_sweep = match cfg.knn_sweep {
        Some(s) => Some(sweep_k(train_raw, s.k_max, s.folds, seeds.knn_sweep).map_err(Error::in_stage("knn sweep"))?),
        None => None,
    };

    let scaler = fit_minmax(&train_raw.x);
    let scale = |d: &Dataset| scaler.apply_dataset(d).map_err(Error::in_stage("scaling"));
    let train = scale(train_raw)?;
    let test = scale(test_raw)?;
    let val = val_raw.map(scale).transpose()?;

    let spec = spec.with_seed(seeds.model);
    let fitted = spec.fit(&train, val.as_ref()).map_err(Error::in_stage("training"))?;
    let model = &fitted.model;

    let eval = |d: &Dataset| evaluate_model(model, d).map_err(Error::in_stage("evaluation"));
    let metrics =
        MetricsSet { train: eval(&train)?, validation: val.as_ref().map(eval).transpose()?, test: eval(&test)? };

    let explanations = match &cfg.explain {
        Some(e) => {
            Some(explain(model, &train, &test, &idx.partitions[1], e, &seeds).map_err(Error::in_stage("explanation"))?)
        }
        None => None,
    };

    Ok(ExperimentReport {
        toolkit: "xmlkit".into(),
        version: crate::VERSION.into(),
        rng_algorithm: RNG_ALGORITHM.into(),
        master_seed: cfg.seed,
        seeds,
        dataset: fingerprint(data),
        split,
        partition_sizes: idx.partitions.iter().map(Vec::len).collect(),
        model_label: spec.label().into(),
        conventions: conventions(&spec, cfg.explain.as_ref()),
        model: spec.clone(),
        trained_model: cfg.include_model.then(|| fitted.model.clone()),
        training: TrainingRecord {
            loss_history: fitted.loss_history,
            validation_loss: fitted.validation_loss,
            best_epoch: fitted.best_epoch,
        },
        confusion_matrix: metrics.test.confusion,
        metrics,
        cross_validation,
        grid,
        knn_sweep,
        explanations,
    })
}

fn conventions(spec: &ModelSpec, explain: Option<&ExplainConfig>) -> Vec<String> {
    let mut c = vec![
        "class 1 = malignant; predicted class is 1 iff probability >= 0.5".to_string(),
        "Min-Max scaler fitted on the training partition only".to_string(),
    ];
    match spec {
        ModelSpec::Knn { .. } => {
            c.push("KNN votes weighted by 1/(distance + 1e-12); exact matches decide alone".into())
        }
        ModelSpec::Forest(_) => c.push("forest probability is the fraction of trees voting class 1".into()),
        ModelSpec::Gbt(_) => c.push("plain gradient boosting on logistic loss, no second-order terms".into()),
        ModelSpec::Mlp(_) => c.push("network parameters taken from the epoch with the lowest validation loss when a validation partition exists".into()),
        _ => {}
    }
    match explain.map(|e| e.method) {
        Some(ExplainMethod::ShapExact | ExplainMethod::ShapMc) => {
            c.push("Shapley value function: mean model output over the background set with absent features taken from background rows".into())
        }
        Some(ExplainMethod::Lime) => c.push(
            "LIME perturbs in the scaled feature space with Gaussian noise (no discretization) and explains P(malignant)".into(),
        ),
        None => {}
    }
    c
}

fn explain(
    model: &TrainedModel,
    train: &Dataset,
    test: &Dataset,
    test_rows: &[usize],
    cfg: &ExplainConfig,
    seeds: &SeedRecord,
) -> Result<ExplanationRecord> {
    let predictions = model.predict_rows(&test.x)?;
    let chosen = select_instances(predictions.as_slice(), cfg.instances);
    let names = train.x.feature_names().to_vec();
    let mut record = ExplanationRecord {
        method: cfg.method,
        instances: chosen.iter().map(|&i| test_rows[i]).collect(),
        link: cfg.link,
        background_size: 0,
        shap: Vec::new(),
        lime: Vec::new(),
        global_importance: None,
    };
    match cfg.method {
        ExplainMethod::ShapExact | ExplainMethod::ShapMc => {
            let bg = BackgroundSet::sample(&train.x, cfg.background.min(train.len()), seeds.background)?;
            record.background_size = bg.len();
            for (n, &i) in chosen.iter().enumerate() {
                let x = test.x.row(i);
                let a = if cfg.method == ExplainMethod::ShapExact {
                    shapley_exact(model, &bg, x, &names, cfg.link)?
                } else {
                    let seed = seeds.explanation.derive(n as u64);
                    shapley_permutation(model, &bg, x, &names, cfg.permutations, seed, cfg.link)?
                };
                record.shap.push(a);
            }
            if !record.shap.is_empty() {
                record.global_importance = Some(global_importance(&record.shap)?);
            }
        }
        ExplainMethod::Lime => {
            let stats = TrainStats::from_matrix(&train.x);
            for (n, &i) in chosen.iter().enumerate() {
                let lc = LimeConfig { seed: seeds.explanation.derive(n as u64), ..cfg.lime.clone() };
                record.lime.push(fit_surrogate(model, test.x.row(i), &names, &stats, &lc)?);
            }
        }
    }
    Ok(record)
}
