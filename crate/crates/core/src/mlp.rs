//! Feed-forward network with a single logit output, trained by
//! back-propagation on the mean binary cross-entropy.
//!
//! Parameters live in one flat vector. Layer `l` maps `fan_in -> fan_out`
//! with its weights stored row-major as `W[i * fan_out + j]` (input `i`,
//! unit `j`) followed by `fan_out` biases. Gradients use the same layout,
//! which lets the optimizers work on plain slices.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Predictor};
use crate::error::{Error, Result};
use crate::linear::sigmoid;
use crate::rng::RngSeed;

/// Mean BCE over raw logits, in the fused form
/// `max(z, 0) - z * y + ln(1 + exp(-|z|))`.
pub fn bce_with_logits(logits: &[f64], labels: &[f64]) -> f64 {
    debug_assert_eq!(logits.len(), labels.len());
    let sum: f64 = logits.iter().zip(labels).map(|(&z, &y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()).sum();
    sum / logits.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::config(format!("unknown activation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerLayout {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl LayerLayout {
    fn w(&self, i: usize, j: usize) -> usize {
        self.offset + i * self.fan_out + j
    }

    fn b(&self, j: usize) -> usize {
        self.offset + self.fan_in * self.fan_out + j
    }

    fn len(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRepr", into = "NetworkRepr")]
pub struct Network {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    layout: Vec<LayerLayout>,
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr {
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

impl TryFrom<NetworkRepr> for Network {
    type Error = Error;
    fn try_from(r: NetworkRepr) -> Result<Self> {
        let mut n = Network::zeros(&r.sizes, r.activation)?;
        Error::check_dim(n.params.len(), r.params.len())?;
        n.params = r.params;
        Ok(n)
    }
}

impl From<Network> for NetworkRepr {
    fn from(n: Network) -> Self {
        NetworkRepr { sizes: n.sizes, activation: n.activation, params: n.params }
    }
}

/// Pre- and post-activation values of every layer for one input; `post[0]`
/// is the input itself and the last `pre` entry holds the logit.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn logit(&self) -> f64 {
        self.pre.last().expect("network has an output layer")[0]
    }
}

impl Network {
    /// All-zero parameters. `sizes` runs from the input width to the output
    /// width, which must be 1.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::config("network needs at least an input and an output layer"));
        }
        if sizes.contains(&0) {
            return Err(Error::config("layer sizes must be positive"));
        }
        if sizes.last() != Some(&1) {
            return Err(Error::config("output layer must have exactly one unit"));
        }
        let mut layout = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let l = LayerLayout { fan_in: w[0], fan_out: w[1], offset };
            offset += l.len();
            layout.push(l);
        }
        Ok(Network { sizes: sizes.to_vec(), activation, params: vec![0.0; offset], layout })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(fan_in, fan_out)` of each weight matrix.
    pub fn weight_shapes(&self) -> Vec<(usize, usize)> {
        self.layout.iter().map(|l| (l.fan_in, l.fan_out)).collect()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let l = &self.layout[layer];
        &self.params[l.offset..l.offset + l.fan_in * l.fan_out]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let l = &self.layout[layer];
        &self.params[l.b(0)..l.b(0) + l.fan_out]
    }

    pub fn set_weight(&mut self, layer: usize, input: usize, unit: usize, value: f64) {
        let idx = self.layout[layer].w(input, unit);
        self.params[idx] = value;
    }

    pub fn set_bias(&mut self, layer: usize, unit: usize, value: f64) {
        let idx = self.layout[layer].b(unit);
        self.params[idx] = value;
    }

    pub fn forward(&self, x: &[f64]) -> Result<(f64, ForwardCache)> {
        Error::check_dim(self.sizes[0], x.len())?;
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &[f64]) -> (f64, ForwardCache) {
        let mut pre = Vec::with_capacity(self.layout.len());
        let mut post = Vec::with_capacity(self.layout.len() + 1);
        post.push(x.to_vec());
        let last = self.layout.len() - 1;
        for (li, l) in self.layout.iter().enumerate() {
            let input = post.last().expect("input pushed");
            let z = self.affine(l, input);
            if li < last {
                post.push(z.iter().map(|&v| self.activation.apply(v)).collect());
            }
            pre.push(z);
        }
        let cache = ForwardCache { pre, post };
        (cache.logit(), cache)
    }

    fn affine(&self, l: &LayerLayout, input: &[f64]) -> Vec<f64> {
        let mut z = self.params[l.b(0)..l.b(0) + l.fan_out].to_vec();
        for (i, &a) in input.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.params[l.w(i, 0)..l.w(i, 0) + l.fan_out];
            for (zj, w) in z.iter_mut().zip(row) {
                *zj += a * w;
            }
        }
        z
    }

    /// Raw output for `x`, skipping the cache.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let last = self.layout.len() - 1;
        for (li, l) in self.layout.iter().enumerate() {
            let mut z = self.affine(l, &a);
            if li < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            a = z;
        }
        a[0]
    }

    /// Gradient of the mean BCE over a batch whose forward caches and labels
    /// are given, in the flat parameter layout.
    pub fn backward(&self, caches: &[ForwardCache], labels: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(caches.len(), labels.len())?;
        if caches.is_empty() {
            return Err(Error::Empty("backward over an empty batch".into()));
        }
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / caches.len() as f64;
        for (cache, &y) in caches.iter().zip(labels) {
            Error::check_dim(self.layout.len(), cache.pre.len())?;
            self.accumulate(cache, y, scale, &mut grad);
        }
        Ok(grad)
    }

    fn accumulate(&self, cache: &ForwardCache, y: f64, scale: f64, grad: &mut [f64]) {
        let mut delta = vec![(sigmoid(cache.logit()) - y) * scale];
        for li in (0..self.layout.len()).rev() {
            let l = &self.layout[li];
            let input = &cache.post[li];
            for (j, &d) in delta.iter().enumerate() {
                grad[l.b(j)] += d;
            }
            for (i, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let base = l.w(i, 0);
                for (j, &d) in delta.iter().enumerate() {
                    grad[base + j] += a * d;
                }
            }
            if li == 0 {
                break;
            }
            let z_prev = &cache.pre[li - 1];
            delta = (0..l.fan_in)
                .map(|i| {
                    let row = &self.params[l.w(i, 0)..l.w(i, 0) + l.fan_out];
                    let back: f64 = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                    back * self.activation.derivative(z_prev[i], input[i])
                })
                .collect();
        }
    }

    /// Mean BCE and its gradient over `rows` of `d`.
    pub fn loss_and_gradient(&self, d: &Dataset, rows: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        for &i in rows {
            let (logit, cache) = self.forward_unchecked(d.x.row(i));
            let y = f64::from(d.y[i]);
            loss += bce_with_logits(&[logit], &[y]);
            self.accumulate(&cache, y, scale, &mut grad);
        }
        (loss * scale, grad)
    }

    pub fn loss(&self, d: &Dataset, rows: &[usize]) -> f64 {
        let logits: Vec<f64> = rows.iter().map(|&i| self.logit(d.x.row(i))).collect();
        let labels: Vec<f64> = rows.iter().map(|&i| f64::from(d.y[i])).collect();
        bce_with_logits(&logits, &labels)
    }

    /// Loss and accuracy over the whole dataset.
    pub fn evaluate(&self, d: &Dataset) -> (f64, f64) {
        let logits: Vec<f64> = d.x.iter_rows().map(|r| self.logit(r)).collect();
        let labels = d.y.to_f64();
        let correct = logits.iter().zip(&labels).filter(|(&z, &y)| (z >= 0.0) == (y == 1.0)).count();
        (bce_with_logits(&logits, &labels), correct as f64 / d.len() as f64)
    }
}

impl Predictor for Network {
    fn n_features(&self) -> usize {
        self.sizes[0]
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// Zero biases and `N(0, 2 / fan_in)` weights for ReLU, `N(0, 1 / fan_in)`
/// otherwise.
pub fn init_network(sizes: &[usize], activation: Activation, seed: RngSeed) -> Result<Network> {
    let mut net = Network::zeros(sizes, activation)?;
    let mut rng = seed.rng();
    for l in net.layout.clone() {
        let gain = if activation == Activation::Relu { 2.0 } else { 1.0 };
        let normal = Normal::new(0.0, (gain / l.fan_in as f64).sqrt()).expect("positive std");
        for k in l.offset..l.offset + l.fan_in * l.fan_out {
            net.params[k] = normal.sample(&mut rng);
        }
    }
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Gd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// First and second moment estimates for Adam; unused by plain descent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], step: 0 }
    }
}

/// One update of `params` in place.
pub fn optimizer_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    learning_rate: f64,
    optimizer: Optimizer,
) -> Result<()> {
    Error::check_dim(params.len(), grads.len())?;
    match optimizer {
        Optimizer::Gd => {
            for (p, g) in params.iter_mut().zip(grads) {
                *p -= learning_rate * g;
            }
        }
        Optimizer::Adam { beta1, beta2, epsilon } => {
            if state.m.len() != params.len() {
                *state = AdamState::new(params.len());
            }
            state.step += 1;
            let t = state.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for k in 0..params.len() {
                let g = grads[k];
                state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g;
                state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g;
                let m_hat = state.m[k] / c1;
                let v_hat = state.v[k] / c2;
                params[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub seed: RngSeed,
    /// Stop once the epoch's training loss is at or below this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_tolerance: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.001,
            batch_size: 32,
            optimizer: Optimizer::adam(),
            seed: RngSeed(0),
            loss_tolerance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub val_loss: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub val_accuracy: Vec<f64>,
    /// Epoch whose parameters were returned (best validation loss), if a
    /// validation set was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
}

/// Mini-batch training with a seeded shuffle each epoch; the last partial
/// batch is kept. With a validation set the parameters from the epoch with
/// the lowest validation loss are returned.
pub fn train_mlp(
    net: Network,
    train: &Dataset,
    validation: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<(Network, TrainHistory)> {
    if cfg.batch_size == 0 {
        return Err(Error::config("batch_size must be at least 1"));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::config("learning_rate must be positive"));
    }
    Error::check_dim(net.sizes[0], train.n_features())?;
    if let Some(v) = validation {
        Error::check_dim(net.sizes[0], v.n_features())?;
    }
    let mut net = net;
    let mut history = TrainHistory::default();
    let mut state = AdamState::new(net.params.len());
    let mut rng = cfg.seed.rng();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, grad) = net.loss_and_gradient(train, batch);
            optimizer_step(&mut net.params, &grad, &mut state, cfg.learning_rate, cfg.optimizer)?;
        }
        let (loss, acc) = net.evaluate(train);
        if !loss.is_finite() || net.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, loss });
        }
        history.train_loss.push(loss);
        history.train_accuracy.push(acc);
        if let Some(v) = validation {
            let (vl, va) = net.evaluate(v);
            history.val_loss.push(vl);
            history.val_accuracy.push(va);
            if best.as_ref().is_none_or(|(b, _)| vl < *b) {
                best = Some((vl, net.params.clone()));
                history.best_epoch = Some(epoch);
            }
        }
        if cfg.loss_tolerance.is_some_and(|eps| loss <= eps) {
            break;
        }
    }
    if let Some((_, params)) = best {
        net.params = params;
    }
    Ok((net, history))
}

/// Gradients below this magnitude are compared absolutely in
/// [`gradient_check`], since a relative error has no meaning near zero.
pub const GRAD_CHECK_ABS_FLOOR: f64 = 1e-3;

/// Finite-difference step used by [`gradient_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Worst disagreement between back-propagated gradients and central
/// differences over every parameter. Each entry is the relative error
/// `|a - n| / max(|a|, |n|)`, or the absolute error when both are below
/// [`GRAD_CHECK_ABS_FLOOR`]. Meaningful only for smooth activations.
pub fn gradient_check(net: &Network, d: &Dataset, rows: &[usize]) -> f64 {
    let (_, analytic) = net.loss_and_gradient(d, rows);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for k in 0..net.params.len() {
        let orig = probe.params[k];
        probe.params[k] = orig + GRAD_CHECK_STEP;
        let up = probe.loss(d, rows);
        probe.params[k] = orig - GRAD_CHECK_STEP;
        let down = probe.loss(d, rows);
        probe.params[k] = orig;
        let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
        let a = analytic[k];
        let scale = a.abs().max(numeric.abs());
        let err = if scale < GRAD_CHECK_ABS_FLOOR { (a - numeric).abs() } else { (a - numeric).abs() / scale };
        worst = worst.max(err);
    }
    worst
}
