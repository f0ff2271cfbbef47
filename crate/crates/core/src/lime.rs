//! Local surrogate explanations: Gaussian perturbations around an instance,
//! an exponential proximity kernel, and a weighted ridge fit of the model's
//! class-1 probability.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, Predictor};
use crate::error::{Error, Result};
use crate::knn::euclidean;
use crate::rng::RngSeed;

/// Per-column spread of the training data, used to size perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub std: Vec<f64>,
}

impl TrainStats {
    /// Population standard deviation of each column.
    pub fn from_matrix(x: &FeatureMatrix) -> Self {
        let n = x.rows() as f64;
        let std = (0..x.cols())
            .map(|j| {
                let mean = x.column(j).sum::<f64>() / n;
                (x.column(j).map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
            })
            .collect();
        TrainStats { std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_samples: usize,
    /// `None` resolves to `0.75 * sqrt(d)`.
    pub kernel_width: Option<f64>,
    pub perturbation_scale: f64,
    pub ridge_lambda: f64,
    pub top_k: usize,
    pub seed: RngSeed,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: 5000,
            kernel_width: None,
            perturbation_scale: 1.0,
            ridge_lambda: 1e-3,
            top_k: 10,
            seed: RngSeed(0),
        }
    }
}

impl LimeConfig {
    pub fn width_for(&self, d: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (d as f64).sqrt())
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::config("LIME needs at least 2 samples"));
        }
        if self.kernel_width.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::config("kernel_width must be positive"));
        }
        if !(self.perturbation_scale >= 0.0) || !(self.ridge_lambda >= 0.0) {
            return Err(Error::config("perturbation_scale and ridge_lambda must be non-negative"));
        }
        if self.top_k == 0 {
            return Err(Error::config("top_k must be at least 1"));
        }
        Ok(())
    }
}

/// `n_samples` rows; row 0 is `x`, row `j` is `x` plus independent Gaussian
/// noise with per-column std `perturbation_scale * train_std`.
pub fn perturb(x: &[f64], stats: &TrainStats, cfg: &LimeConfig) -> Result<FeatureMatrix> {
    Error::check_dim(stats.std.len(), x.len())?;
    let mut rng = cfg.seed.rng();
    let mut values = Vec::with_capacity(cfg.n_samples * x.len());
    values.extend_from_slice(x);
    for _ in 1..cfg.n_samples {
        for (&v, &s) in x.iter().zip(&stats.std) {
            let noise: f64 = StandardNormal.sample(&mut rng);
            values.push(v + noise * s * cfg.perturbation_scale);
        }
    }
    let names = (0..x.len()).map(|j| format!("x{j}")).collect();
    FeatureMatrix::new(cfg.n_samples, x.len(), values, names)
}

/// `exp(-|x - z|^2 / width^2)`.
pub fn kernel_weight(x: &[f64], z: &[f64], width: f64) -> Result<f64> {
    if !(width > 0.0) {
        return Err(Error::config("kernel width must be positive"));
    }
    let d = euclidean(x, z)?;
    Ok((-(d * d) / (width * width)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopFeature {
    pub feature: usize,
    pub name: String,
    /// Coefficient toward malignant (class 1).
    pub weight: f64,
    /// `-weight`: the same contribution read toward benign.
    pub benign_weight: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeExplanation {
    pub feature_names: Vec<String>,
    pub intercept: f64,
    pub weights: Vec<f64>,
    /// Largest `|weight|` first, ties to the lower feature index.
    pub top_k: Vec<TopFeature>,
    /// Weighted R^2 of the surrogate on the perturbation sample.
    pub fidelity: f64,
    pub p_benign: f64,
    pub p_malignant: f64,
    pub kernel_width: f64,
    pub config: LimeConfig,
}

/// Weighted ridge regression with an unpenalized intercept. Returns
/// `(intercept, coefficients)`.
pub fn weighted_ridge(z: &FeatureMatrix, y: &[f64], w: &[f64], lambda: f64) -> Result<(f64, Vec<f64>)> {
    Error::check_dim(z.rows(), y.len())?;
    Error::check_dim(z.rows(), w.len())?;
    let d = z.cols();
    let wsum: f64 = w.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::Singular("kernel weights sum to zero".into()));
    }
    // Centering on the weighted means removes the intercept from the system.
    let mut zbar = vec![0.0; d];
    let mut ybar = 0.0;
    for ((row, &yi), &wi) in z.iter_rows().zip(y).zip(w) {
        ybar += wi * yi;
        for (m, v) in zbar.iter_mut().zip(row) {
            *m += wi * v;
        }
    }
    ybar /= wsum;
    zbar.iter_mut().for_each(|m| *m /= wsum);

    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    let mut c = vec![0.0; d];
    for ((row, &yi), &wi) in z.iter_rows().zip(y).zip(w) {
        for (cj, (v, m)) in c.iter_mut().zip(row.iter().zip(&zbar)) {
            *cj = v - m;
        }
        let r = yi - ybar;
        for i in 0..d {
            let wci = wi * c[i];
            b[i] += wci * r;
            for j in 0..=i {
                a[i * d + j] += wci * c[j];
            }
        }
    }
    for i in 0..d {
        a[i * d + i] += lambda;
        for j in 0..i {
            a[j * d + i] = a[i * d + j];
        }
    }
    let beta = cholesky_solve(&mut a, &mut b, d)?;
    let intercept = ybar - beta.iter().zip(&zbar).map(|(p, q)| p * q).sum::<f64>();
    Ok((intercept, beta))
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, d x d).
fn cholesky_solve(a: &mut [f64], b: &mut [f64], d: usize) -> Result<Vec<f64>> {
    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(0.0, f64::max);
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= a[j * d + k] * a[j * d + k];
        }
        if !(diag > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::Singular("normal equations are singular; use ridge_lambda > 0".into()));
        }
        let l = diag.sqrt();
        a[j * d + j] = l;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= a[i * d + k] * a[j * d + k];
            }
            a[i * d + j] = s / l;
        }
    }
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * d + k] * b[k];
        }
        b[i] = s / a[i * d + i];
    }
    for i in (0..d).rev() {
        let mut s = b[i];
        for k in i + 1..d {
            s -= a[k * d + i] * b[k];
        }
        b[i] = s / a[i * d + i];
    }
    Ok(b.to_vec())
}

/// Weighted R^2; zero when the weighted target variance is zero.
pub fn weighted_r2(y: &[f64], fitted: &[f64], w: &[f64]) -> f64 {
    let wsum: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let ss_tot: f64 = y.iter().zip(w).map(|(&v, &wi)| wi * (v - ybar).powi(2)).sum();
    if ss_tot <= 1e-300 {
        return 0.0;
    }
    let ss_res: f64 = y.iter().zip(fitted).zip(w).map(|((&v, &f), &wi)| wi * (v - f).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

pub fn fit_surrogate<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    feature_names: &[String],
    stats: &TrainStats,
    cfg: &LimeConfig,
) -> Result<LimeExplanation> {
    cfg.validate()?;
    Error::check_dim(model.n_features(), x.len())?;
    Error::check_dim(x.len(), feature_names.len())?;
    let width = cfg.width_for(x.len());
    let z = perturb(x, stats, cfg)?;
    let y: Vec<f64> = z.iter_rows().map(|r| model.proba(r)).collect();
    let w: Vec<f64> = z.iter_rows().map(|r| kernel_weight(x, r, width)).collect::<Result<_>>()?;
    let (intercept, weights) = weighted_ridge(&z, &y, &w, cfg.ridge_lambda)?;
    let fitted: Vec<f64> =
        z.iter_rows().map(|r| intercept + r.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>()).collect();
    let fidelity = weighted_r2(&y, &fitted, &w);

    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].abs().total_cmp(&weights[a].abs()).then(a.cmp(&b)));
    let top_k = order
        .into_iter()
        .take(cfg.top_k)
        .map(|j| TopFeature {
            feature: j,
            name: feature_names[j].clone(),
            weight: weights[j],
            benign_weight: -weights[j],
            value: x[j],
        })
        .collect();
    let p = model.proba(x);
    Ok(LimeExplanation {
        feature_names: feature_names.to_vec(),
        intercept,
        weights,
        top_k,
        fidelity,
        p_benign: 1.0 - p,
        p_malignant: p,
        kernel_width: width,
        config: cfg.clone(),
    })
}
