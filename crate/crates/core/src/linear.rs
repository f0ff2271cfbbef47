//! Logistic regression trained by full-batch gradient descent or by seeded
//! mini-batch stochastic descent.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Predictor};
use crate::error::{Error, Result};
use crate::mlp::bce_with_logits;
use crate::rng::RngSeed;

/// Logistic function, evaluated through `exp(-|z|)` so it never overflows.
pub fn sigmoid(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    if z >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(n_features: usize) -> Self {
        LogisticModel { weights: vec![0.0; n_features], bias: 0.0 }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

impl Predictor for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

pub fn predict_proba_logistic(m: &LogisticModel, x: &[f64]) -> Result<f64> {
    m.predict_proba(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchSize {
    Full,
    Mini(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    pub l2_penalty: f64,
    pub seed: RngSeed,
}

impl Default for LinearTrainConfig {
    fn default() -> Self {
        LinearTrainConfig {
            learning_rate: 0.001,
            epochs: 200,
            batch_size: BatchSize::Full,
            l2_penalty: 0.0,
            seed: RngSeed(0),
        }
    }
}

impl LinearTrainConfig {
    /// Stochastic mode with the default mini-batch of 32.
    pub fn stochastic(seed: RngSeed) -> Self {
        LinearTrainConfig { batch_size: BatchSize::Mini(32), seed, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::config("l2_penalty must be non-negative"));
        }
        if self.batch_size == BatchSize::Mini(0) {
            return Err(Error::config("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Mean BCE of the linear logit over `rows` plus `l2/2 * |w|^2`.
pub fn logistic_objective(m: &LogisticModel, d: &Dataset, rows: &[usize], l2: f64) -> f64 {
    let logits: Vec<f64> = rows.iter().map(|&i| m.logit(d.x.row(i))).collect();
    let labels: Vec<f64> = rows.iter().map(|&i| f64::from(d.y[i])).collect();
    bce_with_logits(&logits, &labels) + 0.5 * l2 * m.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Gradient of [`logistic_objective`] as `(d/dw, d/db)`.
pub fn logistic_gradient(m: &LogisticModel, d: &Dataset, rows: &[usize], l2: f64) -> (Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut gw = vec![0.0; m.weights.len()];
    let mut gb = 0.0;
    for &i in rows {
        let x = d.x.row(i);
        let err = sigmoid(m.logit(x)) - f64::from(d.y[i]);
        gb += err;
        for (g, v) in gw.iter_mut().zip(x) {
            *g += err * v;
        }
    }
    for (g, w) in gw.iter_mut().zip(&m.weights) {
        *g = *g / n + l2 * w;
    }
    (gw, gb / n)
}

/// Row order under which sums are accumulated in full-batch mode: sorted by
/// feature values then label, so the fit does not depend on input order.
fn canonical_order(d: &Dataset) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..d.len()).collect();
    rows.sort_by(|&a, &b| {
        d.x.row(a)
            .iter()
            .zip(d.x.row(b))
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(d.y[a].cmp(&d.y[b]))
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub model: LogisticModel,
    /// Training objective after each epoch.
    pub loss_history: Vec<f64>,
}

pub fn fit_logistic(train: &Dataset, cfg: &LinearTrainConfig) -> Result<LogisticModel> {
    train_logistic(train, cfg).map(|f| f.model)
}

pub fn train_logistic(train: &Dataset, cfg: &LinearTrainConfig) -> Result<LogisticFit> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let mut model = LogisticModel::zeros(train.n_features());
    let mut order = canonical_order(train);
    let mut rng = cfg.seed.rng();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        match cfg.batch_size {
            BatchSize::Full => step(&mut model, train, &order, cfg),
            BatchSize::Mini(b) => {
                order.shuffle(&mut rng);
                for batch in order.chunks(b) {
                    step(&mut model, train, batch, cfg);
                }
            }
        }
        let loss = logistic_objective(&model, train, &order, cfg.l2_penalty);
        if !loss.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence { epoch, loss });
        }
        loss_history.push(loss);
    }
    Ok(LogisticFit { model, loss_history })
}

fn step(model: &mut LogisticModel, d: &Dataset, rows: &[usize], cfg: &LinearTrainConfig) {
    let (gw, gb) = logistic_gradient(model, d, rows, cfg.l2_penalty);
    for (w, g) in model.weights.iter_mut().zip(gw) {
        *w -= cfg.learning_rate * g;
    }
    model.bias -= cfg.learning_rate * gb;
}
