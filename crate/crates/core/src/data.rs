//! Shared value types and the prediction contract every model satisfies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability at or above which a prediction is class 1 (malignant).
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Dense row-major matrix of finite reals with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty(format!("matrix shape {rows}x{cols}")));
        }
        Error::check_dim(rows * cols, values.len())?;
        Error::check_dim(cols, feature_names.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: pos / cols + 1,
                message: format!("non-finite value in column {}", feature_names[pos % cols]),
            });
        }
        Ok(FeatureMatrix { rows, cols, values, feature_names })
    }

    /// Builds a matrix from rows with generated names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let names = (0..cols).map(|j| format!("x{j}")).collect();
        Self::from_rows_named(rows, names)
    }

    pub fn from_rows_named(rows: &[Vec<f64>], feature_names: Vec<String>) -> Result<Self> {
        let cols = feature_names.len();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            Error::check_dim(cols, r.len())?;
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values, feature_names)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.iter_rows().map(move |r| r[j])
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.cols, values, self.feature_names.clone())
    }

    /// Same shape and names, values mapped through `f(column, value)`.
    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let cols = self.cols;
        let values = self.values.iter().enumerate().map(|(k, &v)| f(k % cols, v)).collect();
        FeatureMatrix { values, ..self.clone() }
    }
}

/// Binary labels, 1 = malignant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(pos) = labels.iter().position(|&l| l > 1) {
            return Err(Error::Parse { row: pos + 1, message: format!("label {} is not 0 or 1", labels[pos]) });
        }
        Ok(LabelVector(labels))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(count of 0, count of 1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.0.iter().filter(|&&l| l == 1).count();
        (self.0.len() - ones, ones)
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        LabelVector(indices.iter().map(|&i| self.0[i]).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&l| f64::from(l)).collect()
    }
}

impl std::ops::Index<usize> for LabelVector {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: FeatureMatrix,
    pub y: LabelVector,
}

impl Dataset {
    pub fn new(x: FeatureMatrix, y: LabelVector) -> Result<Self> {
        Error::check_dim(x.rows(), y.len())?;
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Dataset::new(self.x.select_rows(indices)?, self.y.select(indices))
    }

    /// Indices of each class, in row order: `[class 0, class 1]`.
    pub fn class_indices(&self) -> [Vec<usize>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for (i, &l) in self.y.as_slice().iter().enumerate() {
            out[usize::from(l)].push(i);
        }
        out
    }
}

/// Black-box prediction contract. Explainers and metrics only ever see this.
///
/// Implementors provide [`proba`](Predictor::proba), which may assume the
/// input has [`n_features`](Predictor::n_features) entries; the checked
/// entry points validate that first.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;

    /// Probability of class 1. Must lie in `[0, 1]` and be deterministic.
    fn proba(&self, x: &[f64]) -> f64;

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.n_features(), x.len())?;
        Ok(self.proba(x))
    }

    fn predict(&self, x: &[f64]) -> Result<u8> {
        self.predict_proba(x).map(|p| u8::from(p >= DECISION_THRESHOLD))
    }

    fn proba_rows(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        Error::check_dim(self.n_features(), x.cols())?;
        Ok(x.iter_rows().map(|r| self.proba(r)).collect())
    }

    fn predict_rows(&self, x: &FeatureMatrix) -> Result<LabelVector> {
        let p = self.proba_rows(x)?;
        Ok(LabelVector(p.into_iter().map(|p| u8::from(p >= DECISION_THRESHOLD)).collect()))
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn proba(&self, x: &[f64]) -> f64 {
        (**self).proba(x)
    }
}

impl<P: Predictor + ?Sized + Send> Predictor for Box<P> {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn proba(&self, x: &[f64]) -> f64 {
        (**self).proba(x)
    }
}

/// Wraps a closure as a [`Predictor`]; handy for explainer tests and demos.
pub struct FnPredictor<F> {
    n_features: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnPredictor<F> {
    pub fn new(n_features: usize, f: F) -> Self {
        FnPredictor { n_features, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn proba(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}
