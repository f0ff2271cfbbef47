//! Flat TOML configuration mirroring the long flags. Values given on the
//! command line take precedence over the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{Common, Experiment, GridArgs};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    data: Option<PathBuf>,
    out: Option<PathBuf>,
    quiet: Option<bool>,
    model: Option<String>,
    preset: Option<String>,
    split: Option<String>,
    seed: Option<u64>,
    k: Option<usize>,
    neighbors: Option<usize>,
    #[serde(default)]
    param: Vec<String>,
    sweep: Option<usize>,
    explain: Option<String>,
    instances: Option<usize>,
    background: Option<usize>,
    permutations: Option<usize>,
    link: Option<String>,
    kernel_width: Option<f64>,
    samples: Option<usize>,
    plot: Option<String>,
    no_model: Option<bool>,
    #[serde(default)]
    grid: Vec<String>,
    scoring: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    fn for_common(c: &Common) -> Result<Self, CliError> {
        c.config.as_deref().map(Self::load).transpose().map(Option::unwrap_or_default)
    }
}

fn merge<T>(flag: &mut Option<T>, file: Option<T>) {
    if flag.is_none() {
        *flag = file;
    }
}

fn merge_common(c: &mut Common, f: &mut FileConfig) {
    merge(&mut c.data, f.data.take());
    merge(&mut c.out, f.out.take());
    c.quiet |= f.quiet.unwrap_or(false);
}

pub fn resolve_common(mut c: Common) -> Result<Common, CliError> {
    let mut f = FileConfig::for_common(&c)?;
    merge_common(&mut c, &mut f);
    Ok(c)
}

fn merge_experiment(e: &mut Experiment, f: &mut FileConfig) {
    merge_common(&mut e.common, f);
    merge(&mut e.model, f.model.take());
    merge(&mut e.preset, f.preset.take());
    merge(&mut e.split, f.split.take());
    merge(&mut e.seed, f.seed.take());
    merge(&mut e.k, f.k.take());
    merge(&mut e.neighbors, f.neighbors.take());
    if e.params.is_empty() {
        e.params = std::mem::take(&mut f.param);
    }
    merge(&mut e.sweep, f.sweep.take());
    merge(&mut e.explain, f.explain.take());
    merge(&mut e.instances, f.instances.take());
    merge(&mut e.background, f.background.take());
    merge(&mut e.permutations, f.permutations.take());
    merge(&mut e.link, f.link.take());
    merge(&mut e.kernel_width, f.kernel_width.take());
    merge(&mut e.samples, f.samples.take());
    merge(&mut e.plot, f.plot.take());
    e.no_model |= f.no_model.unwrap_or(false);
}

pub fn resolve_experiment(mut e: Experiment) -> Result<Experiment, CliError> {
    let mut f = FileConfig::for_common(&e.common)?;
    merge_experiment(&mut e, &mut f);
    Ok(e)
}

pub fn resolve_grid(mut g: GridArgs) -> Result<GridArgs, CliError> {
    let mut f = FileConfig::for_common(&g.experiment.common)?;
    merge_experiment(&mut g.experiment, &mut f);
    if g.axes.is_empty() {
        g.axes = std::mem::take(&mut f.grid);
    }
    merge(&mut g.scoring, f.scoring.take());
    Ok(g)
}
