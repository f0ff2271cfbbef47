//! Confusion-matrix metrics and rank-based ROC-AUC. Class 1 is positive.

use serde::{Deserialize, Serialize};

use crate::data::LabelVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roc_auc: Option<f64>,
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    Error::check_dim(y_true.len(), y_pred.len())?;
    if y_true.is_empty() {
        return Err(Error::Empty("confusion matrix of zero samples".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, _) => cm.fp += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

pub fn confusion_labels(y_true: &LabelVector, y_pred: &LabelVector) -> Result<ConfusionMatrix> {
    confusion(y_true.as_slice(), y_pred.as_slice())
}

/// Precision is 1 when nothing is predicted positive, recall is 0 when there
/// are no positives, and F1 is 0 when both are 0.
pub fn classification_report(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix of zero samples".into()));
    }
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = if cm.tp + cm.fp == 0 { 1.0 } else { cm.tp as f64 / (cm.tp + cm.fp) as f64 };
    let recall = if cm.tp + cm.fn_ == 0 { 0.0 } else { cm.tp as f64 / (cm.tp + cm.fn_) as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(MetricsReport { accuracy, precision, recall, f1, roc_auc: None })
}

/// Mann-Whitney AUC with average ranks for tied scores.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    Error::check_dim(y_true.len(), scores.len())?;
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::config("roc_auc needs both classes present"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average.
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if y_true[k] == 1 {
                rank_sum_pos += avg;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Full report including AUC when both classes are present.
pub fn evaluate(y_true: &[u8], proba: &[f64]) -> Result<(ConfusionMatrix, MetricsReport)> {
    let pred: Vec<u8> = proba.iter().map(|&p| u8::from(p >= crate::DECISION_THRESHOLD)).collect();
    let cm = confusion(y_true, &pred)?;
    let mut report = classification_report(&cm)?;
    report.roc_auc = roc_auc(y_true, proba).ok();
    Ok((cm, report))
}
