// SPDX-License-Identifier: MIT

//! `gld`: generate regime-switching synthetic data, discover which causal
//! links change across hidden regimes, benchmark, and evaluate.
//!
//! Exit codes: 0 success; 1 discovery finished but raised conflict flags
//! (see the diagnostics block in result.json); 2 usage or IO error.

mod bench;
mod config;
mod io;
mod log;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gld_core::derive_seed;
use gld_core::mcd::{run_mcd, McdOpts};
use gld_core::mcit::{DataEngine, HyperSet, MarkedCit};
use gld_core::metrics::{changing_pairs_from_states, regime_prf, union_skeleton_prf};
use gld_core::scm::ScmSpec;

use config::Prior;
use io::{EvalDto, ResultDto};

#[derive(Parser)]
#[command(
    name = "gld",
    version,
    about = "Graph-local discovery of causal links that change across hidden regimes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate dataset.csv and ground-truth spec.json from a JSON config.
    Generate {
        /// Config path (JSON, "schema": 1).
        config: PathBuf,
        /// Output directory, created if missing.
        out_dir: PathBuf,
    },
    /// Run discovery on a CSV dataset and write a result JSON.
    Discover {
        /// Input CSV; header row names the variables.
        data: PathBuf,
        /// Segment-length prior for block sizing.
        #[arg(long, value_enum, default_value_t = Prior::Generic)]
        prior: Prior,
        /// Level of the dependence and homogeneity tests.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Level of the weak-regime acceptance interval.
        #[arg(long, default_value_t = 0.05)]
        alpha_weak: f64,
        /// Cap on conditioning-set size (default: variable count - 2).
        #[arg(long)]
        max_cond: Option<usize>,
        /// Result path.
        #[arg(long, default_value = "result.json")]
        out: PathBuf,
    },
    /// Run a multi-seed benchmark grid; writes rows.csv and summary.json.
    Bench {
        /// Config path (JSON, "schema": 1).
        config: PathBuf,
        /// Output directory, created if missing.
        out_dir: PathBuf,
        /// Worker threads for parallel seeds (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Score a discovery result against a ground-truth spec.
    Eval {
        /// result.json from `gld discover`.
        result: PathBuf,
        /// spec.json from `gld generate`.
        truth: PathBuf,
        /// Metrics path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Generate { config, out_dir } => cmd_generate(&config, &out_dir),
        Cmd::Discover {
            data,
            prior,
            alpha,
            alpha_weak,
            max_cond,
            out,
        } => cmd_discover(&data, prior, alpha, alpha_weak, max_cond, &out),
        Cmd::Bench {
            config,
            out_dir,
            jobs,
        } => {
            let cfg = config::load_bench(&config)?;
            bench::cmd_bench(&cfg, &out_dir, jobs)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Eval { result, truth, out } => cmd_eval(&result, &truth, out.as_deref()),
    }
}

fn cmd_generate(config: &Path, out_dir: &Path) -> Result<ExitCode> {
    let cfg = config::load_generate(config)?;
    let spec = ScmSpec::generate(&cfg.gen_config(), cfg.seed)?;
    let data = spec.simulate(cfg.n, derive_seed(cfg.seed, 1))?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    io::write_dataset_csv(&out_dir.join("dataset.csv"), &data)?;
    io::write_json(&out_dir.join("spec.json"), &spec)?;
    log::info(format!(
        "wrote dataset.csv ({} x {}) and spec.json ({} changing links)",
        data.n(),
        data.k(),
        spec.changing().len()
    ));
    Ok(ExitCode::SUCCESS)
}

fn cmd_discover(
    data_path: &Path,
    prior: Prior,
    alpha: f64,
    alpha_weak: f64,
    max_cond: Option<usize>,
    out: &Path,
) -> Result<ExitCode> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("--alpha must lie in (0, 1)");
    }
    if !(alpha_weak > 0.0 && alpha_weak < 1.0) {
        bail!("--alpha-weak must lie in (0, 1)");
    }
    let data = io::read_dataset_csv(data_path)?;
    log::info(format!(
        "discover: {} samples x {} variables, prior {}",
        data.n(),
        data.k(),
        prior.name()
    ));
    let mut hyper = HyperSet::new(prior.to_core());
    hyper.alpha = alpha;
    hyper.alpha_weak = alpha_weak;
    let mut engine = DataEngine::new(&data, hyper)?;
    let opts = McdOpts {
        max_cond,
        ..McdOpts::default()
    };
    let result = run_mcd(&mut engine, data.k(), &opts)?;
    log::info(format!(
        "discover: {} indicators, {} states, {} marked tests, {} iterations",
        result.table.indicators.len(),
        result.states.len(),
        engine.memo().len(),
        result.diag.iterations
    ));
    let dto = io::result_to_dto(&result, data.names(), engine.memo());
    io::write_json(out, &dto)?;
    if result.has_conflicts() {
        eprintln!(
            "gld: discovery raised conflict flags; see diagnostics in {}",
            out.display()
        );
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_eval(result_path: &Path, truth_path: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let dto: ResultDto = io::read_json(result_path)?;
    let spec: ScmSpec = io::read_json(truth_path)?;
    let names = dto.union.nodes.clone();
    if names.len() != spec.dag().node_count() {
        bail!(
            "result has {} nodes but spec has {}",
            names.len(),
            spec.dag().node_count()
        );
    }
    let states = dto
        .states
        .iter()
        .map(|s| io::graph_from_dto(&s.graph))
        .collect::<Result<Vec<_>>>()?;
    let predicted = changing_pairs_from_states(&states);
    let truth = spec.changing_pairs();
    let union = io::graph_from_dto(&dto.union)?;
    let pair_names = |set: &BTreeSet<(usize, usize)>| {
        set.iter()
            .map(|&(a, b)| (names[a].clone(), names[b].clone()))
            .collect::<Vec<_>>()
    };
    let eval = EvalDto {
        schema: config::SCHEMA,
        regime: regime_prf(&predicted, &truth).into(),
        union_skeleton: union_skeleton_prf(&union, spec.dag()).into(),
        predicted_changing: pair_names(&predicted),
        true_changing: pair_names(&truth),
    };
    match out {
        Some(path) => io::write_json(path, &eval)?,
        None => {
            let mut text = serde_json::to_string_pretty(&eval)?;
            text.push('\n');
            print!("{text}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
