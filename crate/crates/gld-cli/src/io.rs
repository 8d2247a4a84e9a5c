// SPDX-License-Identifier: MIT

//! File formats: the dataset CSV and the discovery result JSON.
//! Serialization is deterministic (sorted maps, fixed field order), so
//! identical inputs produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gld_core::data::Dataset;
use gld_core::graph::{EdgeMark, MultiIndex, Pdag};
use gld_core::mcd::McdResult;
use gld_core::mcit::{CitDiag, Mark, MarkedValue};
use gld_core::metrics::Prf;
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA;

/// Shortest-roundtrip float formatting; `f64::to_string` parses back to
/// the same bits, which keeps CSV write/read lossless.
pub(crate) fn fmt_f64(v: f64) -> String {
    v.to_string()
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(data.names())?;
    let mut record = Vec::with_capacity(data.k());
    for row in 0..data.n() {
        record.clear();
        for c in 0..data.k() {
            record.push(fmt_f64(data.col(c)[row]));
        }
        w.write_record(&record)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let names: Vec<String> = rdr
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let k = names.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading row {} of {}", i + 1, path.display()))?;
        if rec.len() != k {
            bail!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                i + 1,
                rec.len(),
                k
            );
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().with_context(|| {
                format!("{}: row {}, column {:?}", path.display(), i + 1, names[c])
            })?;
            cols[c].push(v);
        }
    }
    Dataset::new(names, cols).map_err(anyhow::Error::from)
}

/// Serialize as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeDto {
    pub from: String,
    pub to: String,
    /// "directed" means from -> to; "undirected" lists from < to.
    pub mark: String,
    /// Model indicator whose discovering pair is this edge, if any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub indicator: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphDto {
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeDto>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndicatorDto {
    pub id: usize,
    /// The marked query whose regime answer discovered this indicator.
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDto {
    /// Bit i gives indicator i's activity in this state.
    pub bits: usize,
    pub graph: GraphDto,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestDto {
    pub x: String,
    pub y: String,
    pub z: Vec<String>,
    pub mark: Mark,
    pub diag: CitDiag,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChangingDto {
    pub x: String,
    pub y: String,
    pub indicator: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticsDto {
    pub iterations: usize,
    pub best_effort: bool,
    pub unresolved_marks: usize,
    pub truncated: bool,
    pub repr_conflicts: usize,
    pub orientation_conflicts: usize,
    pub transfer_conflicts: usize,
    pub skeleton_drops: usize,
    pub query_count: usize,
    pub distinct_queries: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultDto {
    pub schema: u32,
    pub union: GraphDto,
    /// Edges labeled with the indicator that switches them.
    pub changing: Vec<ChangingDto>,
    pub indicators: Vec<IndicatorDto>,
    /// All reached states, bits ascending; the last is the union state.
    pub states: Vec<StateDto>,
    /// Every marked test the engine answered, canonical query order.
    pub marked_tests: Vec<TestDto>,
    pub diagnostics: DiagnosticsDto,
}

fn name_of(names: &[String], i: usize) -> String {
    names.get(i).cloned().unwrap_or_else(|| format!("X{i}"))
}

fn graph_to_dto(
    graph: &Pdag,
    names: &[String],
    labels: &BTreeMap<(usize, usize), usize>,
) -> GraphDto {
    let nodes: Vec<String> = (0..graph.node_count()).map(|i| name_of(names, i)).collect();
    let edges = graph
        .edges()
        .map(|((a, b), mark)| {
            let (from, to, word) = match mark {
                EdgeMark::Undirected => (a, b, "undirected"),
                EdgeMark::AToB => (a, b, "directed"),
                EdgeMark::BToA => (b, a, "directed"),
            };
            EdgeDto {
                from: name_of(names, from),
                to: name_of(names, to),
                mark: word.to_string(),
                indicator: labels.get(&(a, b)).copied(),
            }
        })
        .collect();
    GraphDto { nodes, edges }
}

/// Parse a graph DTO back into a `Pdag` over the DTO's own node order.
pub fn graph_from_dto(dto: &GraphDto) -> Result<Pdag> {
    let index: BTreeMap<&str, usize> = dto
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    if index.len() != dto.nodes.len() {
        bail!("graph has duplicate node names");
    }
    let mut g = Pdag::new(dto.nodes.len());
    for e in &dto.edges {
        let from = *index
            .get(e.from.as_str())
            .with_context(|| format!("unknown node {:?}", e.from))?;
        let to = *index
            .get(e.to.as_str())
            .with_context(|| format!("unknown node {:?}", e.to))?;
        if from == to {
            bail!("self-loop on node {:?}", e.from);
        }
        match e.mark.as_str() {
            "undirected" => g.insert_undirected(from, to),
            "directed" => g.insert_directed(from, to),
            other => bail!("unknown edge mark {other:?}"),
        }
    }
    Ok(g)
}

/// Assemble the discovery report. `memo` is the engine's full marked-test
/// cache, which doubles as the diagnostic record.
pub fn result_to_dto(
    result: &McdResult,
    names: &[String],
    memo: &BTreeMap<MultiIndex, MarkedValue>,
) -> ResultDto {
    let mut labels: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut indicators = Vec::new();
    let mut changing = Vec::new();
    for ind in &result.table.indicators {
        let q = &ind.query;
        labels.insert((q.x(), q.y()), ind.id);
        indicators.push(IndicatorDto {
            id: ind.id,
            x: name_of(names, q.x()),
            y: name_of(names, q.y()),
            z: q.z().iter().map(|&i| name_of(names, i)).collect(),
        });
        changing.push(ChangingDto {
            x: name_of(names, q.x()),
            y: name_of(names, q.y()),
            indicator: ind.id,
        });
    }
    let union = graph_to_dto(&result.union, names, &labels);
    let states = result
        .states
        .iter()
        .map(|s| StateDto {
            bits: s.bits,
            graph: graph_to_dto(&s.graph, names, &labels),
        })
        .collect();
    let marked_tests = memo
        .iter()
        .map(|(q, v)| TestDto {
            x: name_of(names, q.x()),
            y: name_of(names, q.y()),
            z: q.z().iter().map(|&i| name_of(names, i)).collect(),
            mark: v.mark,
            diag: v.diag.clone(),
        })
        .collect();
    let d = &result.diag;
    ResultDto {
        schema: SCHEMA,
        union,
        changing,
        indicators,
        states,
        marked_tests,
        diagnostics: DiagnosticsDto {
            iterations: d.iterations,
            best_effort: d.best_effort,
            unresolved_marks: d.unresolved_marks,
            truncated: d.truncated,
            repr_conflicts: d.repr_conflicts,
            orientation_conflicts: d.orientation_conflicts,
            transfer_conflicts: d.transfer_conflicts,
            skeleton_drops: d.skeleton_drops,
            query_count: d.query_count,
            distinct_queries: d.queries.len(),
        },
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PrfDto {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<Prf> for PrfDto {
    fn from(p: Prf) -> Self {
        PrfDto {
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalDto {
    pub schema: u32,
    /// Pairs whose presence differs across predicted states, scored
    /// against the ground truth's changing pairs.
    pub regime: PrfDto,
    /// Predicted union skeleton scored against the true DAG's skeleton.
    pub union_skeleton: PrfDto,
    pub predicted_changing: Vec<(String, String)>,
    pub true_changing: Vec<(String, String)>,
}
