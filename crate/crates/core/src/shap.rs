//! Shapley-value attributions for any [`Predictor`].
//!
//! The value of a coalition `S` is the interventional expectation
//! `v(S) = mean_b f(x_S, b_rest)` over a background set: features in `S`
//! come from the explained instance, the rest from each background row.
//! `v(empty)` is the base value and `v(all) = f(x)`.

use rand::seq::{index::sample, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, Predictor};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Largest feature count accepted by [`shapley_exact`].
pub const EXACT_FEATURE_CAP: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BackgroundSet(FeatureMatrix);

impl BackgroundSet {
    pub fn new(x: FeatureMatrix) -> Self {
        BackgroundSet(x)
    }

    /// Up to `n` distinct rows of `train`, drawn without replacement.
    pub fn sample(train: &FeatureMatrix, n: usize, seed: RngSeed) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("background size must be at least 1"));
        }
        let n = n.min(train.rows());
        let mut idx = sample(&mut seed.rng(), train.rows(), n).into_vec();
        idx.sort_unstable();
        Ok(BackgroundSet(train.select_rows(&idx)?))
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }
}

/// Scale the explained quantity lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    #[default]
    Probability,
    /// `ln(p / (1 - p))`, with `p` clamped away from 0 and 1.
    Logit,
}

impl Link {
    pub fn apply(self, p: f64) -> f64 {
        match self {
            Link::Probability => p,
            Link::Logit => {
                let p = p.clamp(1e-15, 1.0 - 1e-15);
                (p / (1.0 - p)).ln()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapMode {
    Exact,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub feature_names: Vec<String>,
    /// Explained instance, in the model's input space.
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub base_value: f64,
    pub fx: f64,
    pub mode: ShapMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_permutations: Option<usize>,
    /// Standard error of each `phi` (permutation mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
    #[serde(default)]
    pub link: Link,
}

impl Attribution {
    /// `sum(phi) - (fx - base_value)`.
    pub fn additivity_gap(&self) -> f64 {
        self.phi.iter().sum::<f64>() - (self.fx - self.base_value)
    }
}

struct Game<'a, P: ?Sized> {
    model: &'a P,
    bg: &'a FeatureMatrix,
    x: &'a [f64],
    link: Link,
}

impl<P: Predictor + ?Sized> Game<'_, P> {
    fn new<'a>(model: &'a P, bg: &'a BackgroundSet, x: &'a [f64], link: Link) -> Result<Game<'a, P>> {
        Error::check_dim(model.n_features(), x.len())?;
        Error::check_dim(model.n_features(), bg.0.cols())?;
        Ok(Game { model, bg: &bg.0, x, link })
    }

    fn value(&self, present: impl Fn(usize) -> bool) -> f64 {
        let mut z = vec![0.0; self.x.len()];
        let mut sum = 0.0;
        for b in self.bg.iter_rows() {
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = if present(j) { self.x[j] } else { b[j] };
            }
            sum += self.link.apply(self.model.proba(&z));
        }
        sum / self.bg.rows() as f64
    }

    fn fx(&self) -> f64 {
        self.link.apply(self.model.proba(self.x))
    }
}

/// `v(S)` for the coalition given as a membership mask.
pub fn value_function<P: Predictor + ?Sized>(model: &P, bg: &BackgroundSet, x: &[f64], subset: &[bool]) -> Result<f64> {
    let game = Game::new(model, bg, x, Link::Probability)?;
    Error::check_dim(x.len(), subset.len())?;
    Ok(game.value(|j| subset[j]))
}

/// Exact Shapley values by enumerating all `2^d` coalitions, each valued
/// once.
pub fn shapley_exact<P: Predictor + ?Sized>(
    model: &P,
    bg: &BackgroundSet,
    x: &[f64],
    feature_names: &[String],
    link: Link,
) -> Result<Attribution> {
    let game = Game::new(model, bg, x, link)?;
    let d = x.len();
    if d > EXACT_FEATURE_CAP {
        return Err(Error::TooManyFeatures { features: d, cap: EXACT_FEATURE_CAP });
    }
    let n_masks = 1usize << d;
    let value_of = |mask: usize| game.value(|j| mask >> j & 1 == 1);
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        (0..n_masks).into_par_iter().map(value_of).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = (0..n_masks).map(value_of).collect();

    // weight[s] = s! (d - s - 1)! / d!
    let weight: Vec<f64> = (0..d)
        .map(|s| {
            let mut w = 1.0;
            for k in 1..=s {
                w *= k as f64;
            }
            for k in 1..d - s {
                w *= k as f64;
            }
            for k in 1..=d {
                w /= k as f64;
            }
            w
        })
        .collect();
    let mut phi = vec![0.0; d];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in (0..n_masks).filter(|m| m & bit == 0) {
            *p += weight[mask.count_ones() as usize] * (values[mask | bit] - values[mask]);
        }
    }
    Ok(Attribution {
        feature_names: feature_names.to_vec(),
        x: x.to_vec(),
        phi,
        base_value: values[0],
        fx: game.fx(),
        mode: ShapMode::Exact,
        n_permutations: None,
        stderr: None,
        link,
    })
}

/// Monte Carlo Shapley values from random feature orderings. Permutation `p`
/// is drawn from `seed.derive(p)`; within it, the marginal gain of each
/// feature is recorded as it joins the coalition, so the gains of one
/// ordering telescope to `v(all) - v(empty)`.
pub fn shapley_permutation<P: Predictor + ?Sized>(
    model: &P,
    bg: &BackgroundSet,
    x: &[f64],
    feature_names: &[String],
    n_permutations: usize,
    seed: RngSeed,
    link: Link,
) -> Result<Attribution> {
    if n_permutations == 0 {
        return Err(Error::config("n_permutations must be at least 1"));
    }
    let game = Game::new(model, bg, x, link)?;
    let d = x.len();
    let run = |p: usize| -> Vec<f64> {
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut seed.derive(p as u64).rng());
        let mut gains = vec![0.0; d];
        let mut sums = vec![0.0; d + 1];
        let mut z = vec![0.0; d];
        for b in game.bg.iter_rows() {
            z.copy_from_slice(b);
            sums[0] += link.apply(model.proba(&z));
            for (k, &j) in order.iter().enumerate() {
                z[j] = x[j];
                sums[k + 1] += link.apply(model.proba(&z));
            }
        }
        let n = game.bg.rows() as f64;
        for (k, &j) in order.iter().enumerate() {
            gains[j] = sums[k + 1] / n - sums[k] / n;
        }
        gains
    };
    #[cfg(feature = "parallel")]
    let samples: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n_permutations).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let samples: Vec<Vec<f64>> = (0..n_permutations).map(run).collect();

    let n = n_permutations as f64;
    let mut phi = vec![0.0; d];
    for s in &samples {
        for (p, g) in phi.iter_mut().zip(s) {
            *p += g;
        }
    }
    phi.iter_mut().for_each(|p| *p /= n);
    let stderr = (0..d)
        .map(|j| {
            if n_permutations < 2 {
                return 0.0;
            }
            let ss: f64 = samples.iter().map(|s| (s[j] - phi[j]).powi(2)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        })
        .collect();
    Ok(Attribution {
        feature_names: feature_names.to_vec(),
        x: x.to_vec(),
        phi,
        base_value: game.value(|_| false),
        fx: game.fx(),
        mode: ShapMode::Permutation,
        n_permutations: Some(n_permutations),
        stderr: Some(stderr),
        link,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub feature_names: Vec<String>,
    pub mean_abs_phi: Vec<f64>,
    /// Feature indices by descending importance, ties to the lower index.
    pub ranking: Vec<usize>,
}

impl GlobalImportance {
    pub fn top(&self, n: usize) -> Vec<&str> {
        self.ranking.iter().take(n).map(|&i| self.feature_names[i].as_str()).collect()
    }
}

pub fn global_importance(attributions: &[Attribution]) -> Result<GlobalImportance> {
    let first = attributions.first().ok_or_else(|| Error::Empty("no attributions".into()))?;
    let d = first.phi.len();
    let mut mean_abs_phi = vec![0.0; d];
    for a in attributions {
        Error::check_dim(d, a.phi.len())?;
        for (m, p) in mean_abs_phi.iter_mut().zip(&a.phi) {
            *m += p.abs();
        }
    }
    let n = attributions.len() as f64;
    mean_abs_phi.iter_mut().for_each(|m| *m /= n);
    let mut ranking: Vec<usize> = (0..d).collect();
    ranking.sort_by(|&a, &b| mean_abs_phi[b].total_cmp(&mean_abs_phi[a]).then(a.cmp(&b)));
    Ok(GlobalImportance { feature_names: first.feature_names.clone(), mean_abs_phi, ranking })
}
