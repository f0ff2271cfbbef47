mod args;
mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};
use xmlkit::dataset::{fit_minmax, load_wdbc_csv};
use xmlkit::pipeline::{
    fingerprint, run_experiment, ExperimentConfig, ExperimentReport, ExplainConfig, ExplainMethod, GridSpec, ModelSpec,
    Scoring, SweepConfig,
};
use xmlkit::plot::{render_plot, Plot, PlotKind, PlotOptions};
use xmlkit::{Dataset, Error, RngSeed};

use args::{Cli, Command, Common, Experiment, GridArgs, ReportArgs};

const DEFAULT_DATA: &str = "data/wdbc.csv";
const SEED_ENV: &str = "XMLKIT_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Core(Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(e) => match e.root() {
                Error::InvalidConfig(_) | Error::TooManyFeatures { .. } => 1,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Inspect(c) => inspect(config::resolve_common(c)?),
        Command::Train(e) => experiment(config::resolve_experiment(e)?, Mode::Train),
        Command::Cv(e) => experiment(config::resolve_experiment(e)?, Mode::Cv),
        Command::Explain(e) => experiment(config::resolve_experiment(e)?, Mode::Explain),
        Command::Grid(g) => grid(config::resolve_grid(g)?),
        Command::Report(r) => report(r),
    }
}

fn load_data(c: &Common) -> Result<Dataset> {
    let path = c.data.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_DATA));
    Ok(load_wdbc_csv(path)?)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Machine output goes to `--out` when given, standard output otherwise.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Data(format!("cannot write to standard output: {e}")))
        }
    }
}

fn note(quiet: bool, msg: impl std::fmt::Display) {
    if !quiet {
        eprintln!("{msg}");
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn inspect(c: Common) -> Result<()> {
    let d = load_data(&c)?;
    let fp = fingerprint(&d);
    let scaler = fit_minmax(&d.x);
    let columns: Vec<Value> =
        d.x.feature_names()
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let mean = d.x.column(j).sum::<f64>() / d.len() as f64;
                json!({ "name": name, "min": scaler.min[j], "max": scaler.max[j], "mean": mean })
            })
            .collect();
    let v = json!({
        "rows": fp.rows,
        "features": fp.cols,
        "benign": fp.benign,
        "malignant": fp.malignant,
        "sha256": fp.sha256,
        "columns": columns,
    });
    emit(c.out.as_deref(), &pretty(&v))?;
    note(c.quiet, format!("rows={} features={} benign={} malignant={}", fp.rows, fp.cols, fp.benign, fp.malignant));
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Train,
    Cv,
    Grid,
    Explain,
}

fn master_seed(flag: Option<u64>) -> Result<RngSeed> {
    if let Some(s) = flag {
        return Ok(RngSeed(s));
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(RngSeed)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(RngSeed(0)),
    }
}

/// `json` if it parses as JSON, else the raw text as a string.
fn loose_value(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

fn key_value(text: &str) -> Result<(&str, &str)> {
    text.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| CliError::Usage(format!("expected KEY=VALUE, got {text:?}")))
}

/// Parses a kebab-case name into a snake_case serde enum.
fn named_enum<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_value(Value::String(text.replace('-', "_")))
        .map_err(|_| CliError::Usage(format!("unknown {what} {text:?}")))
}

fn build_config(e: &Experiment, mode: Mode) -> Result<ExperimentConfig> {
    let seed = master_seed(e.seed)?;
    let mut cfg = match (&e.preset, &e.model) {
        (Some(p), model) => {
            let mut cfg = ExperimentConfig::preset(p, seed)?;
            if let Some(m) = model {
                let spec = ModelSpec::named(m)?;
                if spec.family() != cfg.model.family() {
                    cfg.model = spec;
                }
            }
            cfg
        }
        (None, Some(m)) => ExperimentConfig::new(ModelSpec::named(m)?, "7:3", seed),
        (None, None) => return Err(CliError::Usage("one of --model or --preset is required".into())),
    };
    if let Some(s) = &e.split {
        cfg.split = s.clone();
    }
    if let Some(k) = e.k {
        cfg.folds = k;
    }
    if let Some(n) = e.neighbors {
        cfg.model.set_param("k", &Value::from(n))?;
    }
    for p in &e.params {
        let (k, v) = key_value(p)?;
        cfg.model.set_param(k, &loose_value(v))?;
    }
    if let Some(k_max) = e.sweep {
        cfg.knn_sweep = Some(SweepConfig { k_max, folds: cfg.folds });
    }
    if mode == Mode::Cv {
        cfg.cross_validate = true;
    }
    if e.no_model {
        cfg.include_model = false;
    }
    let method = match (&e.explain, mode) {
        (Some(m), _) => Some(m.parse::<ExplainMethod>()?),
        (None, Mode::Explain) => Some(ExplainMethod::ShapMc),
        (None, _) => None,
    };
    if let Some(method) = method {
        let mut x = ExplainConfig::new(method);
        if let Some(n) = e.instances {
            x.instances = n;
        }
        if let Some(n) = e.background {
            x.background = n;
        }
        if let Some(n) = e.permutations {
            x.permutations = n;
        }
        if let Some(l) = &e.link {
            x.link = named_enum("link", l)?;
        }
        if e.kernel_width.is_some() {
            x.lime.kernel_width = e.kernel_width;
        }
        if let Some(n) = e.samples {
            x.lime.n_samples = n;
        }
        cfg.explain = Some(x);
    }
    Ok(cfg)
}

fn summary(r: &ExperimentReport) -> String {
    let m = &r.metrics.test.metrics;
    let mut s = format!(
        "{} on {} split (seed {}): test accuracy {:.4}, precision {:.4}, recall {:.4}, f1 {:.4}",
        r.model_label,
        r.partition_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("/"),
        r.master_seed.0,
        m.accuracy,
        m.precision,
        m.recall,
        m.f1
    );
    if let Some(cv) = &r.cross_validation {
        s.push_str(&format!(
            "\n{}-fold cross-validation: mean {:.4} (std {:.4})",
            cv.fold_scores.len(),
            cv.mean,
            cv.std
        ));
    }
    if let Some(g) = &r.grid {
        let best = g.best_cell();
        let params: Vec<String> = best.params.iter().map(|p| format!("{}={}", p.name, p.value)).collect();
        s.push_str(&format!(
            "\ngrid: {} cells, best {} with mean {:.4}",
            g.cells.len(),
            params.join(" "),
            best.cv.mean
        ));
    }
    if let Some(k) = &r.knn_sweep {
        s.push_str(&format!("\nk sweep: best k = {}", k.best_k));
    }
    if let Some(g) = r.explanations.as_ref().and_then(|e| e.global_importance.as_ref()) {
        s.push_str(&format!("\ntop features by mean |SHAP|: {}", g.top(5).join(", ")));
    }
    s
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    base.with_file_name(format!("{stem}{suffix}"))
}

fn write_plot(p: &Plot, svg_path: &Path, quiet: bool) -> Result<()> {
    let data_path = svg_path.with_extension("json");
    write_file(svg_path, &p.svg)?;
    write_file(&data_path, &pretty(&p.data))?;
    note(quiet, format!("wrote {} and {}", svg_path.display(), data_path.display()));
    Ok(())
}

fn finish(cfg: &ExperimentConfig, common: &Common, plot: Option<&str>) -> Result<()> {
    let plot_kind = plot.map(str::parse::<PlotKind>).transpose()?;
    if plot_kind.is_some() && common.out.is_none() {
        return Err(CliError::Usage("--plot needs --out so the SVG has somewhere to go".into()));
    }
    let d = load_data(common)?;
    let r = run_experiment(cfg, &d)?;
    emit(common.out.as_deref(), &r.to_json()?)?;
    note(common.quiet, summary(&r));
    if let (Some(kind), Some(out)) = (plot_kind, &common.out) {
        let p = render_plot(std::slice::from_ref(&r), kind, &PlotOptions::default())?;
        write_plot(&p, &with_suffix(out, &format!(".{}.svg", kind.name())), common.quiet)?;
    }
    Ok(())
}

fn experiment(e: Experiment, mode: Mode) -> Result<()> {
    let cfg = build_config(&e, mode)?;
    finish(&cfg, &e.common, e.plot.as_deref())
}

fn grid(g: GridArgs) -> Result<()> {
    let mut cfg = build_config(&g.experiment, Mode::Grid)?;
    let scoring = match &g.scoring {
        Some(s) => Some(named_enum::<Scoring>("scoring", s)?),
        None => None,
    };
    if !g.axes.is_empty() {
        let mut spec = GridSpec::new(scoring.unwrap_or_default());
        for axis in &g.axes {
            let (name, values) = key_value(axis)?;
            spec = spec.axis(name, values.split(',').map(|v| loose_value(v.trim())).collect());
        }
        cfg.grid = Some(spec);
    } else if let (Some(s), Some(grid)) = (scoring, cfg.grid.as_mut()) {
        grid.scoring = s;
    }
    if cfg.grid.is_none() {
        return Err(CliError::Usage("grid needs --grid KEY=V1,V2,... or a preset with a grid".into()));
    }
    finish(&cfg, &g.experiment.common, g.experiment.plot.as_deref())
}

fn report(a: ReportArgs) -> Result<()> {
    let kind: PlotKind = a.plot.parse()?;
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("cannot read report {}: {e}", p.display())))?;
            ExperimentReport::from_json(&text)
                .map_err(|e| CliError::Data(format!("{} is not a report: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let opts =
        PlotOptions { instance: a.instance, max_features: a.max_features, jitter_seed: a.jitter_seed.map(RngSeed) };
    let p = render_plot(&reports, kind, &opts)?;
    match &a.out {
        Some(out) => write_plot(&p, out, a.quiet),
        None => emit(None, &pretty(&json!({ "kind": kind.name(), "svg": p.svg, "data": p.data }))),
    }
}
