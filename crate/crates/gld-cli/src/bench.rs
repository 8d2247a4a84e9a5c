// SPDX-License-Identifier: MIT

//! Multi-seed benchmark harness. Tasks (one per cell and seed) are
//! embarrassingly parallel; each derives its own seed chain from the
//! master seed, so the report is independent of scheduling and, with
//! timing off, byte-identical across runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use gld_core::data::Dataset;
use gld_core::derive_seed;
use gld_core::graph::Pdag;
use gld_core::mcd::{run_mcd, McdOpts};
use gld_core::mcit::{DataEngine, HyperSet, MarkedCit};
use gld_core::metrics::{
    changing_pairs_from_states, regime_prf, sliding_window_baseline, union_skeleton_prf,
    vanilla_cd, Prf,
};
use gld_core::num::{mean, sample_sd};
use gld_core::pc::CdOpts;
use gld_core::scm::ScmSpec;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BenchCell, BenchConfig, Method, SCHEMA};
use crate::io::{fmt_f64, write_json};
use crate::log;

const SLIDING_WINDOW_NOTE: &str = "cutoffs are chosen a posteriori against ground truth; \
     reported as an upper bound, not a deployable method";

struct Row {
    cell_idx: usize,
    label: String,
    node_count: usize,
    max_parents: usize,
    link_budget: usize,
    changing_links: usize,
    n: usize,
    window: usize,
    alpha: f64,
    seed: usize,
    method: &'static str,
    hyper_set: &'static str,
    regime: Prf,
    union_f1: f64,
    runtime_s: f64,
}

fn run_method(
    method: Method,
    cell: &BenchCell,
    data: &Dataset,
    spec: &ScmSpec,
    truth: &BTreeSet<(usize, usize)>,
) -> Result<(Prf, f64)> {
    match method {
        Method::Gld => {
            let mut hyper = HyperSet::new(cell.prior.to_core());
            hyper.alpha = cell.alpha;
            hyper.alpha_weak = cell.alpha_weak;
            let mut engine = DataEngine::new(data, hyper)?;
            let opts = McdOpts {
                max_cond: cell.max_cond,
                ..McdOpts::default()
            };
            let result = run_mcd(&mut engine, data.k(), &opts)?;
            let graphs: Vec<Pdag> = result.states.iter().map(|s| s.graph.clone()).collect();
            let predicted = changing_pairs_from_states(&graphs);
            log::debug(format!(
                "gld: {} states, {} marked tests",
                result.states.len(),
                engine.memo().len()
            ));
            Ok((
                regime_prf(&predicted, truth),
                union_skeleton_prf(&result.union, spec.dag()).f1,
            ))
        }
        Method::Vanilla => {
            let out = vanilla_cd(
                data,
                cell.alpha,
                CdOpts {
                    max_cond: cell.max_cond,
                },
            )?;
            // A single stationary graph never predicts change.
            let predicted = BTreeSet::new();
            Ok((
                regime_prf(&predicted, truth),
                union_skeleton_prf(&out.graph, spec.dag()).f1,
            ))
        }
        Method::SlidingWindow => {
            let report =
                sliding_window_baseline(data, cell.window, cell.alpha, cell.max_cond, truth)?;
            let mut union = Pdag::new(data.k());
            for w in &report.windows {
                for (a, b) in w.skeleton_pairs() {
                    union.insert_undirected(a, b);
                }
            }
            Ok((report.best, union_skeleton_prf(&union, spec.dag()).f1))
        }
    }
}

fn run_task(
    cfg: &BenchConfig,
    cell_idx: usize,
    cell: &BenchCell,
    seed_idx: usize,
) -> Result<Vec<Row>> {
    let cell_seed = derive_seed(cfg.seed, cell_idx as u64);
    let spec_seed = derive_seed(cell_seed, seed_idx as u64);
    let at = || format!("cell {:?}, seed {}", cell.label, seed_idx);
    let spec = ScmSpec::generate(&cell.gen_config(), spec_seed).with_context(at)?;
    let data = spec
        .simulate(cell.n, derive_seed(spec_seed, 1))
        .with_context(at)?;
    let truth = spec.changing_pairs();
    let mut rows = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let (regime, union_f1) =
            run_method(method, cell, &data, &spec, &truth).with_context(at)?;
        let runtime_s = if cfg.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        rows.push(Row {
            cell_idx,
            label: cell.label.clone(),
            node_count: cell.node_count,
            max_parents: cell.max_parents,
            link_budget: cell.link_budget,
            changing_links: cell.changing_links,
            n: cell.n,
            window: cell.window,
            alpha: cell.alpha,
            seed: seed_idx,
            method: method.name(),
            hyper_set: cell.prior.name(),
            regime,
            union_f1,
            runtime_s,
        });
    }
    Ok(rows)
}

fn write_rows_csv(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "label",
        "node_count",
        "max_parents",
        "link_budget",
        "changing_links",
        "n",
        "window",
        "alpha",
        "seed",
        "method",
        "hyper_set",
        "regime_precision",
        "regime_recall",
        "regime_f1",
        "union_f1",
        "runtime_s",
    ])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.node_count.to_string(),
            r.max_parents.to_string(),
            r.link_budget.to_string(),
            r.changing_links.to_string(),
            r.n.to_string(),
            r.window.to_string(),
            fmt_f64(r.alpha),
            r.seed.to_string(),
            r.method.to_string(),
            r.hyper_set.to_string(),
            fmt_f64(r.regime.precision),
            fmt_f64(r.regime.recall),
            fmt_f64(r.regime.f1),
            fmt_f64(r.union_f1),
            fmt_f64(r.runtime_s),
        ])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct MeanSe {
    mean: f64,
    /// Standard error of the mean (normal approximation).
    se: f64,
}

fn mean_se(xs: &[f64]) -> MeanSe {
    let m = mean(xs);
    let se = if xs.len() > 1 {
        sample_sd(xs) / (xs.len() as f64).sqrt()
    } else {
        0.0
    };
    MeanSe { mean: m, se }
}

/// Nearest-rank quantile on a sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

#[derive(Serialize)]
struct RuntimeAgg {
    median: f64,
    q10: f64,
    q90: f64,
}

#[derive(Serialize)]
struct MethodAgg {
    seeds: usize,
    regime_precision: MeanSe,
    regime_recall: MeanSe,
    regime_f1: MeanSe,
    union_f1: MeanSe,
    runtime_s: RuntimeAgg,
}

#[derive(Serialize)]
struct CellSummary {
    label: String,
    node_count: usize,
    max_parents: usize,
    link_budget: usize,
    changing_links: usize,
    n: usize,
    window: usize,
    alpha: f64,
    alpha_weak: f64,
    prior: &'static str,
    methods: BTreeMap<&'static str, MethodAgg>,
}

#[derive(Serialize)]
struct Summary {
    schema: u32,
    name: String,
    seed: u64,
    seeds_per_cell: usize,
    timing: bool,
    cells: Vec<CellSummary>,
    notes: BTreeMap<&'static str, &'static str>,
}

fn summarize(cfg: &BenchConfig, rows: &[Row]) -> Summary {
    let mut cells = Vec::with_capacity(cfg.cells.len());
    for (cell_idx, cell) in cfg.cells.iter().enumerate() {
        let mut methods = BTreeMap::new();
        for &method in &cfg.methods {
            let name = method.name();
            let picked: Vec<&Row> = rows
                .iter()
                .filter(|r| r.cell_idx == cell_idx && r.method == name)
                .collect();
            let col = |f: &dyn Fn(&Row) -> f64| picked.iter().map(|r| f(r)).collect::<Vec<_>>();
            let mut runtimes = col(&|r| r.runtime_s);
            runtimes.sort_by(f64::total_cmp);
            methods.insert(
                name,
                MethodAgg {
                    seeds: picked.len(),
                    regime_precision: mean_se(&col(&|r| r.regime.precision)),
                    regime_recall: mean_se(&col(&|r| r.regime.recall)),
                    regime_f1: mean_se(&col(&|r| r.regime.f1)),
                    union_f1: mean_se(&col(&|r| r.union_f1)),
                    runtime_s: RuntimeAgg {
                        median: quantile(&runtimes, 0.5),
                        q10: quantile(&runtimes, 0.1),
                        q90: quantile(&runtimes, 0.9),
                    },
                },
            );
        }
        cells.push(CellSummary {
            label: cell.label.clone(),
            node_count: cell.node_count,
            max_parents: cell.max_parents,
            link_budget: cell.link_budget,
            changing_links: cell.changing_links,
            n: cell.n,
            window: cell.window,
            alpha: cell.alpha,
            alpha_weak: cell.alpha_weak,
            prior: cell.prior.name(),
            methods,
        });
    }
    let mut notes = BTreeMap::new();
    if cfg.methods.contains(&Method::SlidingWindow) {
        notes.insert("sliding_window", SLIDING_WINDOW_NOTE);
    }
    Summary {
        schema: SCHEMA,
        name: cfg.name.clone(),
        seed: cfg.seed,
        seeds_per_cell: cfg.seeds_per_cell,
        timing: cfg.timing,
        cells,
        notes,
    }
}

pub fn cmd_bench(cfg: &BenchConfig, out_dir: &Path, jobs: Option<usize>) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let tasks: Vec<(usize, usize)> = (0..cfg.cells.len())
        .flat_map(|c| (0..cfg.seeds_per_cell).map(move |s| (c, s)))
        .collect();
    log::info(format!(
        "bench {:?}: {} cells x {} seeds x {} methods",
        cfg.name,
        cfg.cells.len(),
        cfg.seeds_per_cell,
        cfg.methods.len()
    ));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let nested: Vec<Vec<Row>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, s)| run_task(cfg, c, &cfg.cells[c], s))
            .collect::<Result<_>>()
    })?;
    let mut rows: Vec<Row> = nested.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.cell_idx, a.seed, a.method).cmp(&(b.cell_idx, b.seed, b.method))
    });
    write_rows_csv(&out_dir.join("rows.csv"), &rows)?;
    write_json(&out_dir.join("summary.json"), &summarize(cfg, &rows))?;
    log::info(format!("wrote {} rows", rows.len()));
    Ok(())
}
