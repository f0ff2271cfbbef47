//! Browser bindings. The dataset is compiled in so the page needs no fetch.
//!
//! Each export returns a JSON string `{ "svg": ..., "data": ..., "summary": ... }`
//! and throws a string on failure.

use std::cell::RefCell;

use serde_json::json;
use wasm_bindgen::prelude::*;
use xmlkit::dataset::parse_wdbc;
use xmlkit::pipeline::{run_experiment, ExperimentConfig, ExperimentReport, ExplainConfig, ExplainMethod, ModelSpec};
use xmlkit::plot::{render_plot, PlotKind, PlotOptions};
use xmlkit::{Dataset, Error, RngSeed};

const WDBC: &str = include_str!("../../../data/wdbc.csv");

/// Explained test instances per cached report.
pub const INSTANCES: usize = 5;

thread_local! {
    static DATA: Dataset = parse_wdbc(WDBC).expect("bundled dataset parses");
    static SHAP_CACHE: RefCell<Option<(String, u32, ExperimentReport)>> = const { RefCell::new(None) };
}

fn render(r: &ExperimentReport, kind: PlotKind, instance: usize) -> Result<String, Error> {
    let opts = PlotOptions { instance, ..PlotOptions::default() };
    let p = render_plot(std::slice::from_ref(r), kind, &opts)?;
    let m = &r.metrics.test.metrics;
    let summary = json!({
        "model": r.model_label,
        "accuracy": m.accuracy,
        "f1": m.f1,
        "best_k": r.knn_sweep.as_ref().map(|k| k.best_k),
    });
    Ok(json!({ "svg": p.svg, "data": p.data, "summary": summary }).to_string())
}

fn explained(model: &str, seed: u32, method: ExplainMethod, width: Option<f64>) -> Result<ExperimentReport, Error> {
    let mut cfg = ExperimentConfig::new(ModelSpec::named(model)?, "7:3", RngSeed(seed.into()));
    cfg.include_model = false;
    let mut x = ExplainConfig::new(method);
    x.instances = INSTANCES;
    x.background = 40;
    x.permutations = 60;
    x.lime.n_samples = 1000;
    x.lime.kernel_width = width;
    cfg.explain = Some(x);
    DATA.with(|d| run_experiment(&cfg, d))
}

/// Cross-validated accuracy of knn for k in 1..=k_max.
pub fn knn_curve_json(seed: u32, k_max: u32) -> Result<String, Error> {
    let mut cfg = ExperimentConfig::preset("paper-knn-sweep", RngSeed(seed.into()))?;
    cfg.cross_validate = false;
    if let Some(s) = cfg.knn_sweep.as_mut() {
        s.k_max = k_max as usize;
    }
    let r = DATA.with(|d| run_experiment(&cfg, d))?;
    render(&r, PlotKind::KnnCurve, 0)
}

/// Monte Carlo Shapley force plot for one explained instance. The report is
/// cached per (model, seed) so stepping through instances is cheap.
pub fn shap_force_json(model: &str, seed: u32, instance: u32) -> Result<String, Error> {
    SHAP_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        if !matches!(&*cache, Some((m, s, _)) if m == model && *s == seed) {
            *cache = Some((model.to_string(), seed, explained(model, seed, ExplainMethod::ShapMc, None)?));
        }
        let (_, _, r) = cache.as_ref().expect("filled above");
        render(r, PlotKind::Force, instance as usize)
    })
}

/// LIME surrogate for one instance. A non-positive width means the default.
pub fn lime_json(model: &str, seed: u32, instance: u32, kernel_width: f64) -> Result<String, Error> {
    let width = (kernel_width > 0.0).then_some(kernel_width);
    let r = explained(model, seed, ExplainMethod::Lime, width)?;
    render(&r, PlotKind::Lime, instance as usize)
}

fn js(r: Result<String, Error>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn knn_curve(seed: u32, k_max: u32) -> Result<String, JsValue> {
    js(knn_curve_json(seed, k_max))
}

#[wasm_bindgen]
pub fn shap_force(model: &str, seed: u32, instance: u32) -> Result<String, JsValue> {
    js(shap_force_json(model, seed, instance))
}

#[wasm_bindgen]
pub fn lime(model: &str, seed: u32, instance: u32, kernel_width: f64) -> Result<String, JsValue> {
    js(lime_json(model, seed, instance, kernel_width))
}

/// Row counts of the bundled table, for the page header.
#[wasm_bindgen]
pub fn dataset_info() -> String {
    DATA.with(|d| {
        let malignant = d.y.as_slice().iter().filter(|&&y| y == 1).count();
        json!({ "rows": d.len(), "features": d.x.cols(), "malignant": malignant }).to_string()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn bundled_data() {
        let v = parse(&dataset_info());
        assert_eq!(v["rows"], 569);
        assert_eq!(v["malignant"], 212);
    }

    #[test]
    fn curve_has_one_point_per_k() {
        let v = parse(&knn_curve_json(0, 6).unwrap());
        assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
        assert!(v["summary"]["best_k"].as_u64().unwrap() <= 6);
    }

    #[test]
    fn force_plot_cached_across_instances() {
        let a = parse(&shap_force_json("logistic", 1, 0).unwrap());
        let b = parse(&shap_force_json("logistic", 1, 1).unwrap());
        assert_ne!(a["svg"], b["svg"]);
        assert!(shap_force_json("logistic", 1, INSTANCES as u32).is_err());
    }

    #[test]
    fn lime_width_changes_result() {
        let a = parse(&lime_json("logistic", 0, 0, 0.5).unwrap());
        let b = parse(&lime_json("logistic", 0, 0, 8.0).unwrap());
        assert_ne!(a["data"], b["data"]);
        assert!(lime_json("nothing", 0, 0, 1.0).is_err());
    }
}
