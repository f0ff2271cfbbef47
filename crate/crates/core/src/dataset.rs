//! WDBC ingestion, Min-Max scaling and stratified partitioning.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Number of feature columns in a WDBC row (after id and diagnosis).
pub const WDBC_FEATURES: usize = 30;

const WDBC_BASE_NAMES: [&str; 10] = [
    "radius",
    "texture",
    "perimeter",
    "area",
    "smoothness",
    "compactness",
    "concavity",
    "concave_points",
    "symmetry",
    "fractal_dimension",
];

/// Canonical feature names in file order: ten `_mean`, ten `_se`, ten `_worst`.
pub fn wdbc_feature_names() -> Vec<String> {
    ["mean", "se", "worst"]
        .iter()
        .flat_map(|suffix| WDBC_BASE_NAMES.iter().map(move |b| format!("{b}_{suffix}")))
        .collect()
}

pub fn load_wdbc_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_wdbc(&text)
}

/// Parses WDBC CSV text: `id, diagnosis (M|B), 30 features`, with or without
/// a header line. A header is recognised by a non-numeric third cell in the
/// first line; header names (with spaces turned into `_`) become the
/// feature names.
pub fn parse_wdbc(text: &str) -> Result<Dataset> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());

    let mut names = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != WDBC_FEATURES + 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected {} columns, found {}", WDBC_FEATURES + 2, record.len()),
            });
        }
        if idx == 0 && record[2].parse::<f64>().is_err() {
            names = Some(record.iter().skip(2).map(|s| s.replace(' ', "_")).collect());
            continue;
        }
        labels.push(match &record[1] {
            "M" => 1,
            "B" => 0,
            other => return Err(Error::Parse { row, message: format!("diagnosis {other:?} is not M or B") }),
        });
        for (j, cell) in record.iter().skip(2).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                message: format!("feature column {} holds non-numeric value {cell:?}", j + 3),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { row, message: format!("feature column {} is not finite", j + 3) });
            }
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(Error::Empty("no data rows".into()));
    }
    let names = names.unwrap_or_else(wdbc_feature_names);
    let x = FeatureMatrix::new(labels.len(), WDBC_FEATURES, values, names)?;
    Dataset::new(x, LabelVector::new(labels)?)
}

/// Column-wise minimum and maximum of a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_minmax(train: &FeatureMatrix) -> Scaler {
    let mut min = train.row(0).to_vec();
    let mut max = min.clone();
    for row in train.iter_rows().skip(1) {
        for (j, &v) in row.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Scaler { min, max }
}

impl Scaler {
    /// `(x - min) / (max - min)` per column; constant columns map to 0 and
    /// values outside the training range are not clipped.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        Error::check_dim(self.min.len(), x.cols())?;
        Ok(x.map_values(|j, v| self.scale_value(j, v)))
    }

    pub fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.min.len(), x.len())?;
        Ok(x.iter().enumerate().map(|(j, &v)| self.scale_value(j, v)).collect())
    }

    fn scale_value(&self, j: usize, v: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (v - self.min[j]) / range
        } else {
            0.0
        }
    }

    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset> {
        Dataset::new(self.apply(&d.x)?, d.y.clone())
    }
}

pub fn apply_minmax(scaler: &Scaler, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    scaler.apply(x)
}

/// Partition fractions. A three-way split declares partitions in the order
/// train, test, validation, which is also the order that receives
/// remainder samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub test: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<f64>,
    pub seed: RngSeed,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn two_way(train: f64, test: f64, seed: RngSeed) -> Self {
        SplitSpec { train, test, validation: None, seed, stratified: true }
    }

    pub fn three_way(train: f64, test: f64, validation: f64, seed: RngSeed) -> Self {
        SplitSpec { train, test, validation: Some(validation), seed, stratified: true }
    }

    /// Parses `a:b` or `a:b:c` (train:test[:validation]); parts are
    /// normalized by their sum, so `7:3` and `0.7:0.3` are equivalent.
    pub fn parse(text: &str, seed: RngSeed) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::config(format!("split {text:?} is not of the form a:b[:c]")))?;
        let total: f64 = parts.iter().sum();
        if parts.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::config(format!("split {text:?} has a non-positive part")));
        }
        let f: Vec<f64> = parts.iter().map(|p| p / total).collect();
        let spec = match f.as_slice() {
            [a, b] => Self::two_way(*a, *b, seed),
            [a, b, c] => Self::three_way(*a, *b, *c, seed),
            _ => return Err(Error::config(format!("split {text:?} must have two or three parts"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fractions(&self) -> Vec<f64> {
        let mut f = vec![self.train, self.test];
        f.extend(self.validation);
        f
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.fractions();
        if f.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::config("split fractions must be positive"));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("split fractions sum to {sum}, not 1")));
        }
        if !self.stratified {
            return Err(Error::config("only stratified splits are supported"));
        }
        Ok(())
    }
}

/// Row indices of each partition, in [`SplitSpec::fractions`] order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub partitions: Vec<Vec<usize>>,
}

/// Allocation of `count` samples: floor of each share, then one extra each
/// to partitions in declaration order until the remainder is used.
fn allocate(count: usize, fractions: &[f64]) -> Vec<usize> {
    // The small epsilon keeps exact products such as 0.7 * 10 from flooring
    // to 6 after rounding error.
    let mut sizes: Vec<usize> = fractions.iter().map(|f| (f * count as f64 + 1e-9).floor() as usize).collect();
    let mut remainder = count - sizes.iter().sum::<usize>();
    for s in sizes.iter_mut() {
        if remainder == 0 {
            break;
        }
        *s += 1;
        remainder -= 1;
    }
    sizes
}

pub fn stratified_split_indices(d: &Dataset, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let fractions = spec.fractions();
    let mut partitions = vec![Vec::new(); fractions.len()];
    let mut rng = spec.seed.rng();
    for (class, mut members) in d.class_indices().into_iter().enumerate() {
        if members.is_empty() {
            return Err(Error::Empty(format!("class {class} has no samples")));
        }
        members.shuffle(&mut rng);
        let sizes = allocate(members.len(), &fractions);
        if let Some(p) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::config(format!(
                "split allocates no class-{class} samples to partition {p} ({} available)",
                members.len()
            )));
        }
        let mut start = 0;
        for (part, size) in partitions.iter_mut().zip(sizes) {
            part.extend_from_slice(&members[start..start + size]);
            start += size;
        }
    }
    for p in partitions.iter_mut() {
        p.sort_unstable();
    }
    Ok(SplitIndices { partitions })
}

/// Materialized partitions, in [`SplitSpec::fractions`] order.
pub fn stratified_split(d: &Dataset, spec: &SplitSpec) -> Result<Vec<Dataset>> {
    stratified_split_indices(d, spec)?.partitions.iter().map(|idx| d.subset(idx)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    /// `(train indices, held-out indices)` for one fold.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_of.iter().enumerate() {
            if f == fold {
                test.push(i)
            } else {
                train.push(i)
            }
        }
        (train, test)
    }
}

/// Seeded per-class shuffle followed by round-robin dealing. Dealing for the
/// second class continues where the first stopped, which keeps overall fold
/// sizes within one sample of each other as well.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: RngSeed) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::config(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut fold_of = vec![0; d.len()];
    let mut rng = seed.rng();
    let mut next = 0;
    for (class, mut members) in d.class_indices().into_iter().enumerate() {
        if members.len() < k {
            return Err(Error::config(format!("k = {k} exceeds the {} samples of class {class}", members.len())));
        }
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}
