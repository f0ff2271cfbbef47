//! Bagged random forests with majority voting, and gradient-boosted
//! regression trees on the logistic loss.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Predictor, DECISION_THRESHOLD};
use crate::error::{Error, Result};
use crate::linear::sigmoid;
use crate::rng::RngSeed;
use crate::tree::{fit_regression_tree, fit_tree_on, Criterion, FeatureSampler, TreeConfig, TreeModel};

/// `n` uniform draws with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, seed: RngSeed) -> Vec<usize> {
    let mut rng = seed.rng();
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    All,
    /// `ceil(sqrt(d))`.
    Sqrt,
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            FeaturesPerSplit::All => d,
            FeaturesPerSplit::Sqrt => ((d as f64).sqrt().ceil() as usize).clamp(1, d),
            FeaturesPerSplit::Count(k) => k.clamp(1, d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub tree: TreeConfig,
    pub features_per_split: FeaturesPerSplit,
    pub seed: RngSeed,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 30,
            tree: TreeConfig::default(),
            features_per_split: FeaturesPerSplit::Sqrt,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub config: ForestConfig,
}

impl ForestModel {
    /// Number of trees voting class 1 for `x`.
    pub fn votes(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.value(x) >= DECISION_THRESHOLD).count()
    }

    /// Bootstrap sample that tree `t` was fitted on.
    pub fn bootstrap_of(&self, t: usize, n: usize) -> Vec<usize> {
        bootstrap_indices(n, self.config.seed.derive(t as u64))
    }
}

impl Predictor for ForestModel {
    fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    /// Fraction of trees voting class 1; a tie therefore predicts class 1.
    fn proba(&self, x: &[f64]) -> f64 {
        self.votes(x) as f64 / self.trees.len() as f64
    }
}

pub fn predict_forest(m: &ForestModel, x: &[f64]) -> Result<f64> {
    m.predict_proba(x)
}

/// Tree `t` grows on `bootstrap_indices(n, seed.derive(t))` and draws its
/// per-split feature subsets from the same sub-seeded stream.
pub fn fit_forest(train: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    if cfg.n_estimators == 0 {
        return Err(Error::config("n_estimators must be at least 1"));
    }
    if train.is_empty() {
        return Err(Error::Empty("forest training set".into()));
    }
    let targets = train.y.to_f64();
    let per_split = cfg.features_per_split.resolve(train.n_features());
    let fit_one = |t: usize| {
        let sub = cfg.seed.derive(t as u64);
        let rows = bootstrap_indices(train.len(), sub);
        // Separate stream for feature sampling so it does not depend on how
        // many draws the bootstrap consumed.
        let mut rng = sub.derive(0).rng();
        let sampler = FeatureSampler { rng: &mut rng, per_split };
        fit_tree_on(&train.x, &targets, rows, &cfg.tree, Some(sampler))
    };
    #[cfg(feature = "parallel")]
    let trees = {
        use rayon::prelude::*;
        (0..cfg.n_estimators).into_par_iter().map(fit_one).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let trees = (0..cfg.n_estimators).map(fit_one).collect::<Result<Vec<_>>>()?;
    Ok(ForestModel { trees, config: *cfg })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub tree: TreeConfig,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            n_rounds: 100,
            learning_rate: 0.1,
            tree: TreeConfig { criterion: Criterion::Variance, max_depth: Some(3), min_samples_leaf: 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_features: usize,
    pub initial_logit: f64,
    pub trees: Vec<TreeModel>,
    pub learning_rate: f64,
}

impl GbtModel {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.initial_logit + self.learning_rate * self.trees.iter().map(|t| t.value(x)).sum::<f64>()
    }
}

impl Predictor for GbtModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

pub fn predict_gbt(m: &GbtModel, x: &[f64]) -> Result<f64> {
    m.predict_proba(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtFit {
    pub model: GbtModel,
    /// Training BCE before the first round and after each round.
    pub loss_history: Vec<f64>,
}

pub fn fit_gbt(train: &Dataset, cfg: &GbtConfig) -> Result<GbtModel> {
    train_gbt(train, cfg).map(|f| f.model)
}

/// Each round fits a regression tree to the residuals `y - sigmoid(logit)`
/// (the negative BCE gradient) and adds `learning_rate` times its output.
pub fn train_gbt(train: &Dataset, cfg: &GbtConfig) -> Result<GbtFit> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0) {
        return Err(Error::config("gbt learning_rate must lie in (0, 1]"));
    }
    let (neg, pos) = train.y.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::config("gradient boosting needs both classes in the training set"));
    }
    let y = train.y.to_f64();
    let p = pos as f64 / train.len() as f64;
    let initial_logit = (p / (1.0 - p)).ln();
    let mut logits = vec![initial_logit; train.len()];
    let mut trees = Vec::with_capacity(cfg.n_rounds);
    let mut loss_history = vec![crate::mlp::bce_with_logits(&logits, &y)];
    for _ in 0..cfg.n_rounds {
        let residuals: Vec<f64> = logits.iter().zip(&y).map(|(&z, &t)| t - sigmoid(z)).collect();
        let tree = fit_regression_tree(&train.x, &residuals, &cfg.tree)?;
        for (i, z) in logits.iter_mut().enumerate() {
            *z += cfg.learning_rate * tree.value(train.x.row(i));
        }
        trees.push(tree);
        loss_history.push(crate::mlp::bce_with_logits(&logits, &y));
    }
    Ok(GbtFit {
        model: GbtModel { n_features: train.n_features(), initial_logit, trees, learning_rate: cfg.learning_rate },
        loss_history,
    })
}
