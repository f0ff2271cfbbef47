//! CART-style binary trees. Classification trees split on Gini or entropy
//! and store the class-1 fraction in their leaves; regression trees (used by
//! gradient boosting) split on variance and store the leaf mean.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMatrix, Predictor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Splits with a gain at or below this are treated as no improvement.
pub const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
    Variance,
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            "variance" => Ok(Criterion::Variance),
            _ => Err(Error::config(format!("unknown criterion {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub criterion: Criterion,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { criterion: Criterion::Gini, max_depth: None, min_samples_leaf: 1 }
    }
}

impl TreeConfig {
    fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf must be at least 1"));
        }
        Ok(())
    }
}

/// Gini or entropy (base 2) of a `(class 0, class 1)` count pair.
pub fn impurity(counts: (usize, usize), criterion: Criterion) -> f64 {
    let n = (counts.0 + counts.1) as f64;
    let s = Stats { n, sum: counts.1 as f64, sumsq: counts.1 as f64 };
    s.impurity(criterion)
}

/// Running sums of the targets in a node; enough for all three criteria.
#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    n: f64,
    sum: f64,
    sumsq: f64,
}

impl Stats {
    fn push(&mut self, y: f64) {
        self.n += 1.0;
        self.sum += y;
        self.sumsq += y * y;
    }

    fn minus(&self, o: &Stats) -> Stats {
        Stats { n: self.n - o.n, sum: self.sum - o.sum, sumsq: self.sumsq - o.sumsq }
    }

    fn impurity(&self, criterion: Criterion) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        let p1 = self.sum / self.n;
        let p0 = 1.0 - p1;
        match criterion {
            Criterion::Gini => 1.0 - p0 * p0 - p1 * p1,
            Criterion::Entropy => -[p0, p1].iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>(),
            Criterion::Variance => (self.sumsq / self.n - p1 * p1).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Impurity decrease `I(parent) - nl/n I(left) - nr/n I(right)`.
    pub gain: f64,
}

/// Best split over all rows and features; see [`TreeConfig`].
pub fn best_split(x: &FeatureMatrix, y: &[f64], cfg: &TreeConfig) -> Option<SplitCandidate> {
    let rows: Vec<usize> = (0..x.rows()).collect();
    let features: Vec<usize> = (0..x.cols()).collect();
    best_split_on(x, y, &rows, &features, cfg, Some(MIN_GAIN))
}

/// Candidate thresholds are midpoints between consecutive distinct values.
/// `features` must be ascending: ties go to the lower feature index, then
/// the lower threshold. With `min_gain = None` any valid split of an impure
/// node qualifies, which lets the grower get past zero-gain nodes (XOR).
fn best_split_on(
    x: &FeatureMatrix,
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    cfg: &TreeConfig,
    min_gain: Option<f64>,
) -> Option<SplitCandidate> {
    if rows.len() < 2 {
        return None;
    }
    let mut total = Stats::default();
    for &i in rows {
        total.push(y[i]);
    }
    let parent = total.impurity(cfg.criterion);
    if min_gain.is_none() && parent <= MIN_GAIN {
        return None;
    }
    let floor = min_gain.unwrap_or(f64::NEG_INFINITY);
    let min_leaf = cfg.min_samples_leaf;
    let mut best: Option<SplitCandidate> = None;
    let mut sorted = rows.to_vec();
    for &f in features {
        sorted.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)));
        let mut left = Stats::default();
        for k in 0..sorted.len() - 1 {
            left.push(y[sorted[k]]);
            let (lo, hi) = (x.get(sorted[k], f), x.get(sorted[k + 1], f));
            if lo == hi || k + 1 < min_leaf || sorted.len() - k - 1 < min_leaf {
                continue;
            }
            let right = total.minus(&left);
            let gain = parent
                - left.n / total.n * left.impurity(cfg.criterion)
                - right.n / total.n * right.impurity(cfg.criterion);
            if gain > floor && best.is_none_or(|b| gain > b.gain) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(SplitCandidate { feature: f, threshold, gain });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64, samples: usize },
    Split { feature: usize, threshold: f64, samples: usize, left: Box<Node>, right: Box<Node> },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => *samples,
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Node> {
        match self {
            Node::Leaf { .. } => vec![self],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: Node,
    pub n_features: usize,
    /// Normalized impurity-decrease importance per feature; all zero for a
    /// single-leaf tree.
    pub importance: Vec<f64>,
    pub config: TreeConfig,
}

impl TreeModel {
    /// Leaf value reached by `x`: class-1 probability, or the regression mean.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value, .. } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

impl Predictor for TreeModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        self.value(x).clamp(0.0, 1.0)
    }
}

pub fn predict_tree(m: &TreeModel, x: &[f64]) -> Result<f64> {
    Error::check_dim(m.n_features, x.len())?;
    Ok(m.value(x))
}

/// Random feature subsetting applied at every split (random forests).
pub struct FeatureSampler<'a> {
    pub rng: &'a mut Rng,
    pub per_split: usize,
}

pub fn fit_tree(train: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    let targets = train.y.to_f64();
    fit_tree_on(&train.x, &targets, (0..train.len()).collect(), cfg, None)
}

/// Regression tree on real targets (variance criterion is forced).
pub fn fit_regression_tree(x: &FeatureMatrix, targets: &[f64], cfg: &TreeConfig) -> Result<TreeModel> {
    let cfg = TreeConfig { criterion: Criterion::Variance, ..*cfg };
    fit_tree_on(x, targets, (0..x.rows()).collect(), &cfg, None)
}

/// Grows a tree on the given rows, which may repeat (bootstrap samples).
pub fn fit_tree_on(
    x: &FeatureMatrix,
    targets: &[f64],
    rows: Vec<usize>,
    cfg: &TreeConfig,
    mut sampler: Option<FeatureSampler<'_>>,
) -> Result<TreeModel> {
    cfg.validate()?;
    Error::check_dim(x.rows(), targets.len())?;
    if rows.is_empty() {
        return Err(Error::Empty("tree training set".into()));
    }
    let mut importance = vec![0.0; x.cols()];
    let mut grower = Grower { x, targets, cfg, total: rows.len() as f64, importance: &mut importance };
    let root = grower.grow(rows, 0, &mut sampler);
    let sum: f64 = importance.iter().sum();
    if sum > 0.0 {
        importance.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(TreeModel { root, n_features: x.cols(), importance, config: *cfg })
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    targets: &'a [f64],
    cfg: &'a TreeConfig,
    total: f64,
    importance: &'a mut [f64],
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize, sampler: &mut Option<FeatureSampler<'_>>) -> Node {
        let samples = rows.len();
        let value = rows.iter().map(|&i| self.targets[i]).sum::<f64>() / samples as f64;
        let leaf = Node::Leaf { value, samples };
        if self.cfg.max_depth.is_some_and(|m| depth >= m) || samples < 2 * self.cfg.min_samples_leaf {
            return leaf;
        }
        let features: Vec<usize> = match sampler {
            Some(s) if s.per_split < self.x.cols() => {
                let mut f = sample(s.rng, self.x.cols(), s.per_split).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.x.cols()).collect(),
        };
        let split = best_split_on(self.x, self.targets, &rows, &features, self.cfg, Some(MIN_GAIN))
            .or_else(|| best_split_on(self.x, self.targets, &rows, &features, self.cfg, None));
        let Some(split) = split else {
            return leaf;
        };
        self.importance[split.feature] += samples as f64 / self.total * split.gain.max(0.0);
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        let left = Box::new(self.grow(l, depth + 1, sampler));
        let right = Box::new(self.grow(r, depth + 1, sampler));
        Node::Split { feature: split.feature, threshold: split.threshold, samples, left, right }
    }
}
