// SPDX-License-Identifier: MIT

//! JSON configuration files. Every config carries `"schema": 1` and
//! rejects unknown keys so typos fail loudly instead of silently using
//! defaults.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gld_core::mcit::RegimePrior;
use gld_core::scm::{IndicatorMeta, NoiseSpec, ScmGenConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

/// Block-size prior exposed on the command line and in bench cells.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    Generic,
    Large,
}

impl Prior {
    pub fn to_core(self) -> RegimePrior {
        match self {
            Prior::Generic => RegimePrior::Generic,
            Prior::Large => RegimePrior::Large,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Prior::Generic => "generic",
            Prior::Large => "large",
        }
    }
}

fn default_max_parents() -> usize {
    3
}

fn default_coef_range() -> (f64, f64) {
    (0.5, 1.0)
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::Normal { sigma: 1.0 }
}

fn default_prior() -> Prior {
    Prior::Generic
}

fn default_alpha() -> f64 {
    0.05
}

fn default_window() -> usize {
    500
}

fn default_true() -> bool {
    true
}

fn default_methods() -> Vec<Method> {
    vec![Method::Gld, Method::Vanilla, Method::SlidingWindow]
}

/// Input for `gld generate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub schema: u32,
    /// Master seed; the dataset seed is derived from it.
    pub seed: u64,
    pub node_count: usize,
    #[serde(default = "default_max_parents")]
    pub max_parents: usize,
    pub link_budget: usize,
    pub changing_links: usize,
    /// Sample count; also the indicator length.
    pub n: usize,
    #[serde(default = "default_coef_range")]
    pub coef_range: (f64, f64),
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub indicator: IndicatorMeta,
}

impl GenerateConfig {
    pub fn gen_config(&self) -> ScmGenConfig {
        ScmGenConfig {
            node_count: self.node_count,
            max_parents: self.max_parents,
            link_budget: self.link_budget,
            changing_links: self.changing_links,
            n: self.n,
            coef_range: self.coef_range,
            noise: self.noise,
            indicator: self.indicator,
        }
    }
}

/// Discovery methods a bench run can exercise.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Gld,
    Vanilla,
    SlidingWindow,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gld => "gld",
            Method::Vanilla => "vanilla",
            Method::SlidingWindow => "sliding_window",
        }
    }
}

/// One grid cell: a generator setting plus method knobs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCell {
    /// Free-form label copied into every report row.
    pub label: String,
    pub node_count: usize,
    #[serde(default = "default_max_parents")]
    pub max_parents: usize,
    pub link_budget: usize,
    pub changing_links: usize,
    pub n: usize,
    #[serde(default = "default_coef_range")]
    pub coef_range: (f64, f64),
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub indicator: IndicatorMeta,
    #[serde(default = "default_prior")]
    pub prior: Prior,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_alpha")]
    pub alpha_weak: f64,
    #[serde(default)]
    pub max_cond: Option<usize>,
    /// Sliding-window baseline window size (samples).
    #[serde(default = "default_window")]
    pub window: usize,
}

impl BenchCell {
    pub fn gen_config(&self) -> ScmGenConfig {
        ScmGenConfig {
            node_count: self.node_count,
            max_parents: self.max_parents,
            link_budget: self.link_budget,
            changing_links: self.changing_links,
            n: self.n,
            coef_range: self.coef_range,
            noise: self.noise,
            indicator: self.indicator,
        }
    }
}

/// Input for `gld bench`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub schema: u32,
    /// Master seed; every (cell, seed-index) task derives its own.
    pub seed: u64,
    pub name: String,
    pub seeds_per_cell: usize,
    /// With timing off, runtime_s is written as 0 so reports are
    /// byte-identical across runs.
    #[serde(default = "default_true")]
    pub timing: bool,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub cells: Vec<BenchCell>,
}

fn check_alpha(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        bail!("{name} must lie in (0, 1), got {v}");
    }
    Ok(())
}

fn read_json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load_generate(path: &Path) -> Result<GenerateConfig> {
    let cfg: GenerateConfig = read_json_file(path)?;
    if cfg.schema != SCHEMA {
        bail!("unsupported config schema {} (expected {SCHEMA})", cfg.schema);
    }
    if cfg.n == 0 {
        bail!("n must be positive");
    }
    Ok(cfg)
}

pub fn load_bench(path: &Path) -> Result<BenchConfig> {
    let cfg: BenchConfig = read_json_file(path)?;
    if cfg.schema != SCHEMA {
        bail!("unsupported config schema {} (expected {SCHEMA})", cfg.schema);
    }
    if cfg.seeds_per_cell == 0 {
        bail!("seeds_per_cell must be positive");
    }
    if cfg.cells.is_empty() {
        bail!("bench config needs at least one cell");
    }
    if cfg.methods.is_empty() {
        bail!("bench config needs at least one method");
    }
    for (i, cell) in cfg.cells.iter().enumerate() {
        let at = || format!("cell {} ({:?})", i, cell.label);
        check_alpha("alpha", cell.alpha).with_context(at)?;
        check_alpha("alpha_weak", cell.alpha_weak).with_context(at)?;
        if cell.n < 50 {
            bail!("{}: n must be at least 50", at());
        }
        if cfg.methods.contains(&Method::SlidingWindow) {
            if cell.window < 8 {
                bail!("{}: window must be at least 8", at());
            }
            if cell.window > cell.n {
                bail!("{}: window exceeds n", at());
            }
        }
    }
    Ok(cfg)
}
