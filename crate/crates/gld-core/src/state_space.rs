// SPDX-License-Identifier: MIT
//! Regime-state construction: pick one model indicator per pair, express
//! every marked query as a monotone formula over model indicators, and
//! transfer edge orientations across the per-state graphs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{meek_closure, EdgeMark, MultiIndex, Pdag};
use crate::implication::ImplicationOracle;
use crate::mcit::{Mark, MarkedCit};
use crate::CoreError;

/// Hard cap on state-space dimensions; states are enumerated as bitmasks.
pub const KAPPA_CAP: usize = 16;

/// One retained regime indicator; `id` is its bit position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelIndicator {
    pub id: usize,
    pub query: MultiIndex,
}

/// Monotone formula over model indicators: AND of OR-monomials.
/// Empty monomial list means "always active" (the uninformative bound).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndicatorRepr {
    pub monomials: Vec<Vec<usize>>,
    pub certified: bool,
}

impl IndicatorRepr {
    pub fn eval(&self, bits: usize) -> bool {
        self.monomials
            .iter()
            .all(|m| m.iter().any(|&id| bits & (1 << id) != 0))
    }
}

/// Model indicators plus a representation for every marked query.
#[derive(Clone, Debug, Default)]
pub struct StateTable {
    pub indicators: Vec<ModelIndicator>,
    pub reprs: BTreeMap<MultiIndex, IndicatorRepr>,
    pub truncated: bool,
    pub repr_conflicts: usize,
}

impl StateTable {
    pub fn kappa(&self) -> usize {
        self.indicators.len()
    }

    /// All state bitmasks, ascending; the all-ones state comes last.
    pub fn states(&self) -> impl Iterator<Item = usize> {
        0..(1usize << self.indicators.len())
    }

    /// Truth value of a represented query in a state, None if unknown.
    pub fn value(&self, j: &MultiIndex, bits: usize) -> Option<bool> {
        self.reprs.get(j).map(|r| r.eval(bits))
    }
}

/// One indicator per pair with marked results: scan the pair's marked
/// queries in canonical order and keep the one whose regime is certified
/// smallest. An accepted implication from the incumbent to the challenger
/// bounds the challenger's regime by the incumbent's, so the challenger
/// replaces it. Pairs that also produced an independent result are skipped.
pub fn discover_model_indicators<E>(engine: &mut E) -> Result<Vec<ModelIndicator>, CoreError>
where
    E: MarkedCit + ImplicationOracle,
{
    let mut marked: BTreeMap<(usize, usize), Vec<MultiIndex>> = BTreeMap::new();
    let mut excluded: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (q, v) in engine.memo() {
        match v.mark {
            Mark::Regime => marked.entry(q.pair()).or_default().push(q.clone()),
            Mark::Independent => {
                excluded.insert(q.pair());
            }
            Mark::Dependent => {}
        }
    }
    let mut out = Vec::new();
    for (pair, queries) in marked {
        if excluded.contains(&pair) {
            continue;
        }
        let mut current: Option<MultiIndex> = None;
        for j in queries {
            current = match current {
                None => Some(j),
                Some(c) => {
                    if engine.implies(&[c.clone()], &j)? {
                        Some(j)
                    } else {
                        Some(c)
                    }
                }
            };
        }
        if let Some(q) = current {
            out.push(ModelIndicator {
                id: out.len(),
                query: q,
            });
        }
    }
    Ok(out)
}

/// Candidate monomials over `kappa` indicator ids, ordered by degree then
/// lexicographically on the sorted id lists.
fn candidate_monomials(kappa: usize) -> Vec<Vec<usize>> {
    let mut c: Vec<Vec<usize>> = (1usize..(1 << kappa))
        .map(|mask| (0..kappa).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    c.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    c
}

fn is_superset(sup: &[usize], sub: &[usize]) -> bool {
    sub.iter().all(|v| sup.binary_search(v).is_ok())
}

/// Express `j` as an AND of OR-monomials over the model indicators.
/// Accepted monomials certify upper bounds on j's regime; their
/// conjunction is the tightest expressible one. An empty result signals
/// that no monomial could be certified.
pub fn represent_indicator<E>(
    indicators: &[ModelIndicator],
    j: &MultiIndex,
    engine: &mut E,
) -> Result<IndicatorRepr, CoreError>
where
    E: ImplicationOracle,
{
    if let Some(k) = indicators.iter().position(|m| m.query == *j) {
        return Ok(IndicatorRepr {
            monomials: vec![vec![k]],
            certified: true,
        });
    }
    let mut cands = candidate_monomials(indicators.len());
    // a same-pair representor, if any, must participate in every monomial
    if let Some(k) = indicators
        .iter()
        .position(|m| m.query.pair() == j.pair())
    {
        cands.retain(|m| m.binary_search(&k).is_ok());
    }
    let mut accepted: Vec<Vec<usize>> = Vec::new();
    while let Some(r) = if cands.is_empty() {
        None
    } else {
        Some(cands.remove(0))
    } {
        if cands.is_empty() && accepted.is_empty() {
            // last remaining candidate: keep it as the only viable bound
            return Ok(IndicatorRepr {
                monomials: vec![r],
                certified: false,
            });
        }
        let lhs: Vec<MultiIndex> = r
            .iter()
            .map(|&id| indicators[id].query.clone())
            .collect();
        if engine.implies(&lhs, j)? {
            cands.retain(|m| !is_superset(m, &r));
            accepted.push(r);
        }
    }
    let certified = !accepted.is_empty();
    Ok(IndicatorRepr {
        monomials: accepted,
        certified,
    })
}

/// Full state-space construction for a marked-query set: discovery, then
/// representation, then identity fallback for queries nothing certified.
/// Fallback dimensions are appended while the cap allows; queries still
/// unrepresented get the always-active bound.
pub fn construct_state_space<E>(
    j_set: &BTreeSet<MultiIndex>,
    engine: &mut E,
    kappa_cap: usize,
) -> Result<StateTable, CoreError>
where
    E: MarkedCit + ImplicationOracle,
{
    let mut table = StateTable::default();
    if j_set.is_empty() {
        return Ok(table);
    }
    let mut indicators = discover_model_indicators(engine)?;
    if indicators.len() > kappa_cap {
        indicators.truncate(kappa_cap);
        table.truncated = true;
    }
    let mut conflicts: Vec<MultiIndex> = Vec::new();
    for j in j_set {
        let repr = represent_indicator(&indicators, j, engine)?;
        if repr.monomials.is_empty() {
            conflicts.push(j.clone());
            table.repr_conflicts += 1;
        } else {
            table.reprs.insert(j.clone(), repr);
        }
    }
    for j in conflicts {
        if indicators.len() < kappa_cap {
            let id = indicators.len();
            indicators.push(ModelIndicator {
                id,
                query: j.clone(),
            });
            table.reprs.insert(
                j,
                IndicatorRepr {
                    monomials: vec![vec![id]],
                    certified: true,
                },
            );
        } else {
            table.truncated = true;
            table.reprs.insert(
                j,
                IndicatorRepr {
                    monomials: vec![],
                    certified: false,
                },
            );
        }
    }
    table.indicators = indicators;
    Ok(table)
}

/// Propagate edge directions across graphs sharing a skeleton edge.
/// Disagreements fall back to the union graph's current mark and freeze
/// the pair; agreements copy to graphs still undirected there. Meek
/// closure runs per graph each round until nothing changes.
pub fn transfer_orientations(
    union: &Pdag,
    states: &[Pdag],
) -> (Pdag, Vec<Pdag>, usize) {
    let mut graphs: Vec<Pdag> = Vec::with_capacity(states.len() + 1);
    graphs.push(union.clone());
    graphs.extend_from_slice(states);
    let mut frozen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut conflicts = 0usize;
    // freeze set plus monotone orientation makes this terminate; the bound
    // is a belt against regressions
    for _ in 0..64 {
        let mut changed = false;
        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for g in &graphs {
            pairs.extend(g.skeleton_pairs());
        }
        for pair in pairs {
            if frozen.contains(&pair) {
                continue;
            }
            let marks: Vec<EdgeMark> = graphs
                .iter()
                .filter_map(|g| g.mark(pair.0, pair.1))
                .collect();
            let fwd = marks.iter().any(|&m| m == EdgeMark::AToB);
            let rev = marks.iter().any(|&m| m == EdgeMark::BToA);
            if fwd && rev {
                conflicts += 1;
                let keep = graphs[0].mark(pair.0, pair.1).unwrap_or(EdgeMark::Undirected);
                for g in &mut graphs {
                    if g.has_edge(pair.0, pair.1) && g.mark(pair.0, pair.1) != Some(keep) {
                        g.remove_edge(pair.0, pair.1);
                        match keep {
                            EdgeMark::Undirected => g.insert_undirected(pair.0, pair.1),
                            EdgeMark::AToB => g.insert_directed(pair.0, pair.1),
                            EdgeMark::BToA => g.insert_directed(pair.1, pair.0),
                        }
                        changed = true;
                    }
                }
                frozen.insert(pair);
            } else if fwd || rev {
                for g in &mut graphs {
                    if g.mark(pair.0, pair.1) == Some(EdgeMark::Undirected) {
                        g.remove_edge(pair.0, pair.1);
                        if fwd {
                            g.insert_directed(pair.0, pair.1);
                        } else {
                            g.insert_directed(pair.1, pair.0);
                        }
                        changed = true;
                    }
                }
            }
        }
        for g in &mut graphs {
            if meek_closure(g) {
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let new_union = graphs.remove(0);
    (new_union, graphs, conflicts)
}
