//! Brute-force K-nearest neighbours with inverse-distance weighting.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMatrix, LabelVector, Predictor, DECISION_THRESHOLD};
use crate::dataset::{fit_minmax, stratified_kfold};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Added to distances before inverting.
pub const DISTANCE_EPS: f64 = 1e-12;

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    Error::check_dim(a.len(), b.len())?;
    Ok(sq_dist(a, b).sqrt())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub x: FeatureMatrix,
    pub y: LabelVector,
    pub k: usize,
}

impl KnnModel {
    pub fn fit(train: &Dataset, k: usize) -> Result<Self> {
        if k == 0 || k > train.len() {
            return Err(Error::config(format!("k = {k} must lie in 1..={}", train.len())));
        }
        Ok(KnnModel { x: train.x.clone(), y: train.y.clone(), k })
    }

    /// `(distance, training index)` sorted ascending, ties by index.
    fn ranked(&self, x: &[f64]) -> Vec<(f64, usize)> {
        let mut d: Vec<(f64, usize)> = self.x.iter_rows().enumerate().map(|(i, r)| (sq_dist(r, x).sqrt(), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d
    }
}

/// Weighted class-1 share among the first `k` ranked neighbours. Neighbours
/// at distance zero, if any, decide alone by their vote fraction.
fn weighted_share(ranked: &[(f64, usize)], labels: &LabelVector, k: usize) -> f64 {
    let nearest = &ranked[..k];
    let exact: Vec<_> = nearest.iter().filter(|(d, _)| *d == 0.0).collect();
    if !exact.is_empty() {
        return exact.iter().filter(|(_, i)| labels[*i] == 1).count() as f64 / exact.len() as f64;
    }
    let (mut pos, mut total) = (0.0, 0.0);
    for &(d, i) in nearest {
        let w = 1.0 / (d + DISTANCE_EPS);
        total += w;
        if labels[i] == 1 {
            pos += w;
        }
    }
    pos / total
}

impl Predictor for KnnModel {
    fn n_features(&self) -> usize {
        self.x.cols()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        weighted_share(&self.ranked(x), &self.y, self.k)
    }
}

pub fn knn_predict(m: &KnnModel, x: &[f64]) -> Result<f64> {
    m.predict_proba(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweep {
    pub best_k: usize,
    /// Mean cross-validated accuracy for k = 1, 2, ..., k_max.
    pub accuracy: Vec<f64>,
}

/// Stratified k-fold accuracy for every k in `1..=k_max`. Each fold is
/// Min-Max scaled with statistics from its own training part.
pub fn sweep_k(d: &Dataset, k_max: usize, folds: usize, seed: RngSeed) -> Result<KSweep> {
    if k_max == 0 {
        return Err(Error::config("k_max must be at least 1"));
    }
    let assignment = stratified_kfold(d, folds, seed)?;
    let mut correct = vec![0.0; k_max];
    let mut fold_acc = vec![vec![0.0; k_max]; folds];
    for (fold, acc) in fold_acc.iter_mut().enumerate() {
        let (train_idx, test_idx) = assignment.split(fold);
        if k_max > train_idx.len() {
            return Err(Error::config(format!("k_max = {k_max} exceeds fold training size")));
        }
        let train = d.subset(&train_idx)?;
        let scaler = fit_minmax(&train.x);
        let model = KnnModel { x: scaler.apply(&train.x)?, y: train.y, k: 1 };
        let test = scaler.apply(&d.x.select_rows(&test_idx)?)?;
        for (row, &orig) in test.iter_rows().zip(&test_idx) {
            let ranked = model.ranked(row);
            for (k, a) in acc.iter_mut().enumerate() {
                let pred = u8::from(weighted_share(&ranked, &model.y, k + 1) >= DECISION_THRESHOLD);
                if pred == d.y[orig] {
                    *a += 1.0;
                }
            }
        }
        acc.iter_mut().for_each(|a| *a /= test_idx.len() as f64);
    }
    for acc in &fold_acc {
        for (c, a) in correct.iter_mut().zip(acc) {
            *c += a / folds as f64;
        }
    }
    let mut best_k = 1;
    for (k, &a) in correct.iter().enumerate() {
        if a > correct[best_k - 1] {
            best_k = k + 1;
        }
    }
    Ok(KSweep { best_k, accuracy: correct })
}
