//! Static SVG figures with companion JSON carrying the exact numbers.

use std::fmt::Write as _;

use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::knn::KSweep;
use crate::lime::LimeExplanation;
use crate::metrics::MetricsReport;
use crate::pipeline::ExperimentReport;
use crate::rng::RngSeed;
use crate::shap::{global_importance, Attribution, GlobalImportance};

const WIDTH: f64 = 760.0;
const RED: (u8, u8, u8) = (0xd6, 0x27, 0x28);
const BLUE: (u8, u8, u8) = (0x1f, 0x77, 0xb4);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Force,
    Waterfall,
    Summary,
    Importance,
    BarCompare,
    KnnCurve,
    Lime,
}

impl PlotKind {
    pub const ALL: [PlotKind; 7] = [
        PlotKind::Force,
        PlotKind::Waterfall,
        PlotKind::Summary,
        PlotKind::Importance,
        PlotKind::BarCompare,
        PlotKind::KnnCurve,
        PlotKind::Lime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Force => "force",
            PlotKind::Waterfall => "waterfall",
            PlotKind::Summary => "summary",
            PlotKind::Importance => "importance",
            PlotKind::BarCompare => "bar-compare",
            PlotKind::KnnCurve => "knn-curve",
            PlotKind::Lime => "lime",
        }
    }
}

impl std::str::FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown plot kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotOptions {
    /// Which explained instance force/waterfall/lime plots show.
    pub instance: usize,
    /// Features shown before the rest are folded into one entry.
    pub max_features: usize,
    /// Summary-plot jitter seed; defaults to the report's master seed.
    pub jitter_seed: Option<RngSeed>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions { instance: 0, max_features: 10, jitter_seed: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub kind: PlotKind,
    pub svg: String,
    pub data: Value,
}

/// Renders one figure. `bar-compare` uses every report; the other kinds use
/// the first.
pub fn render_plot(reports: &[ExperimentReport], kind: PlotKind, opts: &PlotOptions) -> Result<Plot> {
    let first = reports.first().ok_or_else(|| Error::Empty("no reports to plot".into()))?;
    let shap = || -> Result<&[Attribution]> {
        match &first.explanations {
            Some(e) if !e.shap.is_empty() => Ok(&e.shap),
            _ => Err(Error::MissingData(format!("{} plot needs SHAP attributions in the report", kind.name()))),
        }
    };
    let pick = |n: usize| -> Result<usize> {
        if opts.instance < n {
            Ok(opts.instance)
        } else {
            Err(Error::MissingData(format!("instance {} not explained ({n} available)", opts.instance)))
        }
    };
    match kind {
        PlotKind::Force => {
            let a = shap()?;
            force_plot(&a[pick(a.len())?])
        }
        PlotKind::Waterfall => {
            let a = shap()?;
            waterfall_plot(&a[pick(a.len())?], opts.max_features)
        }
        PlotKind::Summary => summary_plot(shap()?, opts.jitter_seed.unwrap_or(first.master_seed), opts.max_features),
        PlotKind::Importance => {
            let g = match first.explanations.as_ref().and_then(|e| e.global_importance.clone()) {
                Some(g) => g,
                None => global_importance(shap()?)?,
            };
            importance_plot(&g, opts.max_features)
        }
        PlotKind::BarCompare => {
            let rows: Vec<(String, MetricsReport)> =
                reports.iter().map(|r| (r.model_label.clone(), r.metrics.test.metrics)).collect();
            bar_compare_plot(&rows)
        }
        PlotKind::KnnCurve => {
            let s = first
                .knn_sweep
                .as_ref()
                .ok_or_else(|| Error::MissingData("knn-curve plot needs a k sweep in the report".into()))?;
            knn_curve_plot(s)
        }
        PlotKind::Lime => {
            let l = match &first.explanations {
                Some(e) if !e.lime.is_empty() => &e.lime,
                _ => return Err(Error::MissingData("lime plot needs LIME explanations in the report".into())),
            };
            lime_plot(&l[pick(l.len())?])
        }
    }
}

struct Svg {
    body: String,
    height: f64,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn hex((r, g, b): (u8, u8, u8)) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Linear blend from blue (t = 0) to red (t = 1).
fn gradient(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
    hex((mix(BLUE.0, RED.0), mix(BLUE.1, RED.1), mix(BLUE.2, RED.2)))
}

fn sign_color(v: f64) -> String {
    hex(if v >= 0.0 { RED } else { BLUE })
}

impl Svg {
    fn new(height: f64, title: &str) -> Self {
        let mut s = Svg { body: String::new(), height };
        s.text(WIDTH / 2.0, 22.0, "middle", 15.0, title);
        s
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let (x, w) = if w < 0.0 { (x + w, -w) } else { (x, w) };
        let _ = writeln!(self.body, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#);
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: f64, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="{size}">{}</text>"#,
            esc(content)
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}" fill-opacity="0.8"/>"#);
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{h}\" viewBox=\"0 0 {WIDTH} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            h = self.height
        )
    }
}

/// Maps `[lo, hi]` onto `[a, b]`, padding a degenerate range.
struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if hi - lo > 1e-12 { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let pad = (hi - lo) * 0.05;
        Scale { lo: lo - pad, hi: hi + pad, a, b }
    }

    fn at(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub feature: String,
    pub phi: f64,
    pub start: f64,
    pub end: f64,
}

/// Cumulative segments from the base value through `items` in order; the
/// final end point is pinned to `f(x)`.
fn chain(a: &Attribution, items: Vec<(String, f64)>) -> Vec<Segment> {
    let mut cur = a.base_value;
    let mut segs: Vec<Segment> = items
        .into_iter()
        .map(|(feature, phi)| {
            let start = cur;
            cur += phi;
            Segment { feature, phi, start, end: cur }
        })
        .collect();
    if let Some(last) = segs.last_mut() {
        last.end = a.fx;
    }
    segs
}

fn named(a: &Attribution, order: &[usize]) -> Vec<(String, f64)> {
    order.iter().map(|&j| (a.feature_names[j].clone(), a.phi[j])).collect()
}

/// Positive contributions (red) push right from the base value, negative
/// ones (blue) push left, ending at `f(x)`.
pub fn force_plot(a: &Attribution) -> Result<Plot> {
    let mut order: Vec<usize> = (0..a.phi.len()).filter(|&j| a.phi[j] != 0.0).collect();
    order.sort_by(|&i, &j| {
        (a.phi[j] >= 0.0).cmp(&(a.phi[i] >= 0.0)).then(a.phi[j].abs().total_cmp(&a.phi[i].abs())).then(i.cmp(&j))
    });
    let segs = chain(a, named(a, &order));
    let lo = segs.iter().flat_map(|s| [s.start, s.end]).fold(a.base_value.min(a.fx), f64::min);
    let hi = segs.iter().flat_map(|s| [s.start, s.end]).fold(a.base_value.max(a.fx), f64::max);
    let sc = Scale::new(lo, hi, 40.0, WIDTH - 40.0);
    let mut svg = Svg::new(170.0, "Force plot");
    for s in &segs {
        svg.rect(sc.at(s.start), 70.0, sc.at(s.end) - sc.at(s.start), 30.0, &sign_color(s.phi));
    }
    for (k, s) in segs.iter().take(6).enumerate() {
        let x = (sc.at(s.start) + sc.at(s.end)) / 2.0;
        svg.text(x, if k % 2 == 0 { 120.0 } else { 136.0 }, "middle", 10.0, &s.feature);
    }
    let bx = sc.at(a.base_value);
    svg.line(bx, 55.0, bx, 110.0, "#333");
    svg.text(bx, 50.0, "middle", 11.0, &format!("base {}", fmt(a.base_value)));
    let fx = sc.at(a.fx);
    svg.line(fx, 60.0, fx, 110.0, "#000");
    svg.text(fx, 160.0, "middle", 12.0, &format!("f(x) = {}", fmt(a.fx)));
    let data = json!({
        "kind": "force",
        "base_value": a.base_value,
        "fx": a.fx,
        "segments": segs,
    });
    Ok(Plot { kind: PlotKind::Force, svg: svg.finish(), data })
}

/// Features sorted by `|phi|`; beyond `max_features` the remainder is
/// folded into one "other features" bar.
pub fn waterfall_plot(a: &Attribution, max_features: usize) -> Result<Plot> {
    let mut order: Vec<usize> = (0..a.phi.len()).collect();
    order.sort_by(|&i, &j| a.phi[j].abs().total_cmp(&a.phi[i].abs()).then(i.cmp(&j)));
    let keep = max_features.max(1).min(order.len());
    let rest = (order.len() > keep).then(|| {
        let n = order.len() - keep;
        (format!("{n} other features"), order[keep..].iter().map(|&j| a.phi[j]).sum::<f64>())
    });
    // Smallest contributions first so the largest bar sits next to f(x).
    let mut shown = order[..keep].to_vec();
    shown.reverse();
    let items: Vec<(String, f64)> = rest.into_iter().chain(named(a, &shown)).collect();
    let segs = chain(a, items);
    let lo = segs.iter().flat_map(|s| [s.start, s.end]).fold(a.base_value, f64::min);
    let hi = segs.iter().flat_map(|s| [s.start, s.end]).fold(a.base_value, f64::max);
    let row = 24.0;
    let top = 50.0;
    let height = top + row * segs.len() as f64 + 50.0;
    let sc = Scale::new(lo, hi, 220.0, WIDTH - 60.0);
    let mut svg = Svg::new(height, "Waterfall plot");
    // Drawn top-down from f(x), as the cumulative sum unwinds toward the base.
    for (k, s) in segs.iter().rev().enumerate() {
        let y = top + row * k as f64;
        svg.rect(sc.at(s.start), y + 3.0, sc.at(s.end) - sc.at(s.start), row - 6.0, &sign_color(s.phi));
        svg.text(210.0, y + row * 0.65, "end", 11.0, &s.feature);
        let label = format!("{}{}", if s.phi >= 0.0 { "+" } else { "" }, fmt(s.phi));
        svg.text(sc.at(s.start.max(s.end)) + 4.0, y + row * 0.65, "start", 10.0, &label);
    }
    let bottom = top + row * segs.len() as f64;
    svg.line(sc.at(a.base_value), top, sc.at(a.base_value), bottom + 8.0, "#666");
    svg.text(sc.at(a.base_value), bottom + 22.0, "middle", 11.0, &format!("E[f(X)] = {}", fmt(a.base_value)));
    svg.line(sc.at(a.fx), top - 8.0, sc.at(a.fx), bottom, "#000");
    svg.text(sc.at(a.fx), top - 12.0, "middle", 11.0, &format!("f(x) = {}", fmt(a.fx)));
    let data = json!({
        "kind": "waterfall",
        "base_value": a.base_value,
        "fx": a.fx,
        "bars": segs,
    });
    Ok(Plot { kind: PlotKind::Waterfall, svg: svg.finish(), data })
}

/// One row per feature (highest mean `|phi|` on top); each dot is an
/// instance at its `phi`, colored by the feature's value from low (blue) to
/// high (red), with seeded vertical jitter.
pub fn summary_plot(attrs: &[Attribution], seed: RngSeed, max_features: usize) -> Result<Plot> {
    let g = global_importance(attrs)?;
    let feats: Vec<usize> = g.ranking.iter().copied().take(max_features.max(1)).collect();
    let mut rng = seed.rng();
    let jitter = Uniform::new_inclusive(-0.3, 0.3).expect("valid range");
    let lo = attrs.iter().flat_map(|a| feats.iter().map(|&j| a.phi[j])).fold(0.0, f64::min);
    let hi = attrs.iter().flat_map(|a| feats.iter().map(|&j| a.phi[j])).fold(0.0, f64::max);
    let row = 26.0;
    let top = 50.0;
    let sc = Scale::new(lo, hi, 220.0, WIDTH - 40.0);
    let mut svg = Svg::new(top + row * feats.len() as f64 + 50.0, "SHAP summary");
    let zero = sc.at(0.0);
    svg.line(zero, top - 6.0, zero, top + row * feats.len() as f64, "#999");
    let mut rows = Vec::new();
    for (r, &j) in feats.iter().enumerate() {
        let y0 = top + row * (r as f64 + 0.5);
        svg.text(210.0, y0 + 4.0, "end", 11.0, &g.feature_names[j]);
        let vmin = attrs.iter().map(|a| a.x[j]).fold(f64::INFINITY, f64::min);
        let vmax = attrs.iter().map(|a| a.x[j]).fold(f64::NEG_INFINITY, f64::max);
        let mut points = Vec::new();
        for a in attrs {
            let t = if vmax > vmin { (a.x[j] - vmin) / (vmax - vmin) } else { 0.5 };
            let dy: f64 = jitter.sample(&mut rng);
            svg.circle(sc.at(a.phi[j]), y0 + dy * row, 3.0, &gradient(t));
            points.push(json!({"phi": a.phi[j], "value": a.x[j], "jitter": dy}));
        }
        rows.push(json!({"feature": g.feature_names[j], "mean_abs_phi": g.mean_abs_phi[j], "points": points}));
    }
    let bottom = top + row * feats.len() as f64;
    svg.text(sc.at(lo), bottom + 20.0, "middle", 10.0, &fmt(lo));
    svg.text(sc.at(hi), bottom + 20.0, "middle", 10.0, &fmt(hi));
    svg.text(
        (220.0 + WIDTH - 40.0) / 2.0,
        bottom + 38.0,
        "middle",
        11.0,
        "SHAP value (low feature value blue, high red)",
    );
    let data = json!({"kind": "summary", "jitter_seed": seed, "rows": rows});
    Ok(Plot { kind: PlotKind::Summary, svg: svg.finish(), data })
}

fn hbar_plot(title: &str, items: &[(String, f64)], color: impl Fn(f64) -> String) -> Svg {
    let row = 24.0;
    let top = 50.0;
    let hi = items.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max).max(1e-12);
    let lo = items.iter().map(|(_, v)| *v).fold(0.0, f64::min);
    let hi = if lo < 0.0 { items.iter().map(|(_, v)| *v).fold(0.0, f64::max) } else { hi };
    let sc = Scale::new(lo, hi, 230.0, WIDTH - 70.0);
    let mut svg = Svg::new(top + row * items.len() as f64 + 30.0, title);
    for (k, (name, v)) in items.iter().enumerate() {
        let y = top + row * k as f64;
        svg.rect(sc.at(0.0), y + 3.0, sc.at(*v) - sc.at(0.0), row - 6.0, &color(*v));
        svg.text(220.0, y + row * 0.65, "end", 11.0, name);
        svg.text(sc.at(v.max(0.0)) + 4.0, y + row * 0.65, "start", 10.0, &fmt(*v));
    }
    svg.line(sc.at(0.0), top, sc.at(0.0), top + row * items.len() as f64, "#333");
    svg
}

pub fn importance_plot(g: &GlobalImportance, max_features: usize) -> Result<Plot> {
    let items: Vec<(String, f64)> =
        g.ranking.iter().take(max_features.max(1)).map(|&j| (g.feature_names[j].clone(), g.mean_abs_phi[j])).collect();
    let svg = hbar_plot("Mean |SHAP value|", &items, |_| hex(BLUE));
    let data = json!({
        "kind": "importance",
        "features": items.iter().map(|(n, v)| json!({"feature": n, "mean_abs_phi": v})).collect::<Vec<_>>(),
    });
    Ok(Plot { kind: PlotKind::Importance, svg: svg.finish(), data })
}

/// Accuracy and recall per model, models sorted by accuracy.
pub fn bar_compare_plot(rows: &[(String, MetricsReport)]) -> Result<Plot> {
    if rows.is_empty() {
        return Err(Error::Empty("no models to compare".into()));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&i, &j| rows[j].1.accuracy.total_cmp(&rows[i].1.accuracy).then(i.cmp(&j)));
    let group = 40.0;
    let top = 60.0;
    let sc = Scale::new(0.0, 1.0, 230.0, WIDTH - 70.0);
    let mut svg = Svg::new(top + group * rows.len() as f64 + 30.0, "Accuracy and recall by model");
    svg.rect(240.0, 34.0, 10.0, 10.0, &hex(BLUE));
    svg.text(255.0, 43.0, "start", 11.0, "accuracy");
    svg.rect(330.0, 34.0, 10.0, 10.0, &hex(RED));
    svg.text(345.0, 43.0, "start", 11.0, "recall");
    for (k, &i) in order.iter().enumerate() {
        let (name, m) = &rows[i];
        let y = top + group * k as f64;
        svg.text(220.0, y + group * 0.5, "end", 11.0, name);
        for (off, v, c) in [(4.0, m.accuracy, BLUE), (20.0, m.recall, RED)] {
            svg.rect(sc.at(0.0), y + off, sc.at(v) - sc.at(0.0), 14.0, &hex(c));
            svg.text(sc.at(v) + 4.0, y + off + 11.0, "start", 10.0, &fmt(v));
        }
    }
    let data = json!({
        "kind": "bar-compare",
        "models": order.iter().map(|&i| json!({
            "model": rows[i].0,
            "accuracy": rows[i].1.accuracy,
            "precision": rows[i].1.precision,
            "recall": rows[i].1.recall,
            "f1": rows[i].1.f1,
        })).collect::<Vec<_>>(),
    });
    Ok(Plot { kind: PlotKind::BarCompare, svg: svg.finish(), data })
}

pub fn knn_curve_plot(s: &KSweep) -> Result<Plot> {
    if s.accuracy.is_empty() {
        return Err(Error::MissingData("empty k sweep".into()));
    }
    let lo = s.accuracy.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.accuracy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (left, right, top, bottom) = (70.0, WIDTH - 30.0, 50.0, 330.0);
    let xs = Scale::new(1.0, s.accuracy.len() as f64, left, right);
    let ys = Scale::new(lo, hi, bottom, top);
    let mut svg = Svg::new(380.0, "Cross-validated accuracy of KNN by k");
    svg.line(left, bottom, right, bottom, "#333");
    svg.line(left, top, left, bottom, "#333");
    let pts: Vec<(f64, f64)> = s.accuracy.iter().enumerate().map(|(k, &a)| (xs.at((k + 1) as f64), ys.at(a))).collect();
    svg.polyline(&pts, &hex(BLUE));
    for (k, &(x, y)) in pts.iter().enumerate() {
        let best = k + 1 == s.best_k;
        svg.circle(x, y, if best { 5.0 } else { 3.0 }, &hex(if best { RED } else { BLUE }));
        svg.text(x, bottom + 16.0, "middle", 10.0, &(k + 1).to_string());
    }
    svg.text(left - 6.0, ys.at(hi) + 4.0, "end", 10.0, &fmt(hi));
    svg.text(left - 6.0, ys.at(lo) + 4.0, "end", 10.0, &fmt(lo));
    svg.text((left + right) / 2.0, bottom + 36.0, "middle", 11.0, &format!("k (best k = {})", s.best_k));
    let data = json!({"kind": "knn-curve", "best_k": s.best_k, "accuracy": s.accuracy});
    Ok(Plot { kind: PlotKind::KnnCurve, svg: svg.finish(), data })
}

/// Surrogate weights of the top features; positive weights push toward
/// malignant (red), negative toward benign (blue).
pub fn lime_plot(e: &LimeExplanation) -> Result<Plot> {
    let items: Vec<(String, f64)> = e.top_k.iter().map(|t| (t.name.clone(), t.weight)).collect();
    let title = format!(
        "LIME: P(benign) = {}, P(malignant) = {}, fidelity R2 = {}",
        fmt(e.p_benign),
        fmt(e.p_malignant),
        fmt(e.fidelity)
    );
    let svg = hbar_plot(&title, &items, sign_color);
    let data = json!({
        "kind": "lime",
        "p_benign": e.p_benign,
        "p_malignant": e.p_malignant,
        "fidelity": e.fidelity,
        "intercept": e.intercept,
        "features": e.top_k,
    });
    Ok(Plot { kind: PlotKind::Lime, svg: svg.finish(), data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shap::{Link, ShapMode};

    fn attribution(phi: Vec<f64>, base: f64) -> Attribution {
        let d = phi.len();
        Attribution {
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            x: (0..d).map(|j| j as f64 / d as f64).collect(),
            fx: base + phi.iter().sum::<f64>(),
            phi,
            base_value: base,
            mode: ShapMode::Exact,
            n_permutations: None,
            stderr: None,
            link: Link::Probability,
        }
    }

    #[test]
    fn force_ends_at_fx() {
        let mut a = attribution(vec![0.3, -0.1], 0.4);
        a.fx = 0.6;
        let p = force_plot(&a).unwrap();
        let segs = p.data["segments"].as_array().unwrap();
        assert_eq!(segs[0]["start"], 0.4);
        assert_eq!(segs.last().unwrap()["end"], 0.6);
        assert!(p.svg.starts_with("<svg"));
    }

    #[test]
    fn waterfall_folds_rest() {
        let a = attribution(vec![0.05, -0.2, 0.01, 0.3], 0.5);
        let p = waterfall_plot(&a, 2).unwrap();
        let bars = p.data["bars"].as_array().unwrap();
        assert_eq!(bars.len(), 3);
        assert_eq!(bars[0]["feature"], "2 other features");
        assert_eq!(bars[2]["feature"], "f3");
        assert_eq!(bars[2]["end"].as_f64().unwrap(), a.fx);
    }

    #[test]
    fn summary_jitter_deterministic() {
        let attrs = vec![attribution(vec![0.1, -0.2], 0.5), attribution(vec![-0.3, 0.2], 0.5)];
        let a = summary_plot(&attrs, RngSeed(4), 10).unwrap();
        assert_eq!(a, summary_plot(&attrs, RngSeed(4), 10).unwrap());
        assert_ne!(a.svg, summary_plot(&attrs, RngSeed(5), 10).unwrap().svg);
    }

    #[test]
    fn escaping() {
        assert_eq!(esc("a<b & \"c\">"), "a&lt;b &amp; &quot;c&quot;&gt;");
        assert_eq!(gradient(0.0), "#1f77b4");
        assert_eq!(gradient(1.0), "#d62728");
    }

    #[test]
    fn kind_names_round_trip() {
        for k in PlotKind::ALL {
            assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
        }
        assert!("pie".parse::<PlotKind>().is_err());
    }
}
