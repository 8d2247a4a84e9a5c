// SPDX-License-Identifier: MIT
//! PC-stable over an abstract boolean independence callback.
//!
//! The callback answers "is x independent of y given z"; everything else
//! (data, marked values, state substitution) lives behind it. Queries are
//! logged in issue order so a run's lookup region can be replayed.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::graph::{meek_closure, MultiIndex, Pdag};
use crate::util::Combinations;
use crate::CoreError;

/// Engine options.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CdOpts {
    /// Largest conditioning-set size; None means node_count - 2.
    pub max_cond: Option<usize>,
}

/// One discovery run: graph, separating sets per removed pair, the exact
/// query sequence, and how many collider demands contradicted each other.
#[derive(Clone, Debug)]
pub struct CdOutput {
    pub graph: Pdag,
    pub sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    pub queries: Vec<MultiIndex>,
    pub orientation_conflicts: usize,
}

/// Level-wise skeleton search with per-level frozen adjacencies.
pub fn pc_stable_skeleton<F>(
    cit: &mut F,
    node_count: usize,
    max_cond: usize,
) -> Result<(Pdag, BTreeMap<(usize, usize), Vec<usize>>, Vec<MultiIndex>), CoreError>
where
    F: FnMut(&MultiIndex) -> Result<bool, CoreError>,
{
    let mut g = Pdag::complete(node_count);
    let mut sepsets = BTreeMap::new();
    let mut queries = Vec::new();
    for level in 0..=max_cond {
        // deletions within a level must not influence candidate sets
        let frozen: Vec<Vec<usize>> = (0..node_count).map(|v| g.adjacent(v)).collect();
        let mut feasible = false;
        for x in 0..node_count {
            for y in (x + 1)..node_count {
                if !g.has_edge(x, y) {
                    continue;
                }
                if frozen[x].len() > level || frozen[y].len() > level {
                    feasible = true; // candidate sets exclude the partner
                }
                'pair: for (base, other) in [(x, y), (y, x)] {
                    let cands: Vec<usize> = frozen[base]
                        .iter()
                        .copied()
                        .filter(|&v| v != other)
                        .collect();
                    if cands.len() < level {
                        continue;
                    }
                    for subset in Combinations::new(&cands, level) {
                        let q = MultiIndex::new(x, y, subset)?;
                        queries.push(q.clone());
                        if cit(&q)? {
                            g.remove_edge(x, y);
                            sepsets.insert((x, y), q.z().to_vec());
                            break 'pair;
                        }
                    }
                }
            }
        }
        if !feasible {
            break;
        }
    }
    Ok((g, sepsets, queries))
}

/// Collider orientation from separating sets, then Meek closure.
/// Contradictory collider demands on one edge leave it undirected and are
/// counted; causal sufficiency is assumed, so no bidirected marks.
pub fn orient(
    skeleton: &Pdag,
    sepsets: &BTreeMap<(usize, usize), Vec<usize>>,
) -> (Pdag, usize) {
    let n = skeleton.node_count();
    // demands[(a, b)] = (a -> b wanted, b -> a wanted) with a < b
    let mut demands: BTreeMap<(usize, usize), (bool, bool)> = BTreeMap::new();
    for c in 0..n {
        let adj = skeleton.adjacent(c);
        for (i, &a) in adj.iter().enumerate() {
            for &b in &adj[i + 1..] {
                if skeleton.has_edge(a, b) {
                    continue; // shielded
                }
                let Some(sep) = sepsets.get(&(a.min(b), a.max(b))) else {
                    continue;
                };
                if sep.contains(&c) {
                    continue;
                }
                for from in [a, b] {
                    let key = (from.min(c), from.max(c));
                    let e = demands.entry(key).or_insert((false, false));
                    if from < c {
                        e.0 = true;
                    } else {
                        e.1 = true;
                    }
                }
            }
        }
    }
    let mut g = skeleton.clone();
    let mut conflicts = 0usize;
    for ((a, b), (fwd, rev)) in demands {
        match (fwd, rev) {
            (true, true) => conflicts += 1,
            (true, false) => g.insert_directed(a, b),
            (false, true) => g.insert_directed(b, a),
            (false, false) => unreachable!("demand entries are created on insert"),
        }
    }
    meek_closure(&mut g);
    (g, conflicts)
}

/// Skeleton search plus orientation.
pub fn run_cd<F>(cit: &mut F, node_count: usize, opts: CdOpts) -> Result<CdOutput, CoreError>
where
    F: FnMut(&MultiIndex) -> Result<bool, CoreError>,
{
    let max_cond = opts
        .max_cond
        .unwrap_or_else(|| node_count.saturating_sub(2));
    let (skeleton, sepsets, queries) = pc_stable_skeleton(cit, node_count, max_cond)?;
    let (graph, orientation_conflicts) = orient(&skeleton, &sepsets);
    Ok(CdOutput {
        graph,
        sepsets,
        queries,
        orientation_conflicts,
    })
}
