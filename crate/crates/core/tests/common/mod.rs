#![allow(dead_code)]

use xmlkit::dataset::load_wdbc_csv;
use xmlkit::{Dataset, FeatureMatrix, LabelVector};

pub fn wdbc_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.csv")
}

pub fn wdbc() -> Dataset {
    load_wdbc_csv(wdbc_path()).expect("bundled WDBC file loads")
}

pub fn ds(rows: &[Vec<f64>], y: &[u8]) -> Dataset {
    Dataset::new(FeatureMatrix::from_rows(rows).unwrap(), LabelVector::new(y.to_vec()).unwrap()).unwrap()
}

pub fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
