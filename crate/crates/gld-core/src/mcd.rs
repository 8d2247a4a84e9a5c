// SPDX-License-Identifier: MIT
//! Multiple causal discovery: alternate between state-space construction
//! from marked queries and per-state discovery runs until no new regime
//! marks appear, then transfer orientations across the graphs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::graph::{Dag, MultiIndex, Pdag};
use crate::implication::ImplicationOracle;
use crate::mcit::{CitDiag, Mark, MarkedCit, MarkedValue};
use crate::pc::{run_cd, CdOpts, CdOutput};
use crate::scm::ScmSpec;
use crate::state_space::{construct_state_space, transfer_orientations, StateTable, KAPPA_CAP};
use crate::CoreError;

/// Loop controls. The iteration cap only matters when finite-sample noise
/// keeps minting fresh marks; with consistent answers the loop reaches a
/// fixpoint in at most |distinct marked queries| rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McdOpts {
    pub max_cond: Option<usize>,
    pub iteration_cap: usize,
    pub kappa_cap: usize,
}

impl Default for McdOpts {
    fn default() -> Self {
        McdOpts {
            max_cond: None,
            iteration_cap: 10,
            kappa_cap: KAPPA_CAP,
        }
    }
}

/// One per-state discovery run. `raw` is the direct engine output;
/// `graph` additionally has union-skeleton enforcement and transferred
/// orientations applied.
#[derive(Clone, Debug)]
pub struct StateRun {
    pub bits: usize,
    pub graph: Pdag,
    pub raw: Pdag,
    pub sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    pub orientation_conflicts: usize,
}

#[derive(Clone, Debug, Default)]
pub struct McdDiag {
    pub iterations: usize,
    /// The iteration cap cut the loop short of a fixpoint.
    pub best_effort: bool,
    /// Regime marks from the final round that never joined the state space.
    pub unresolved_marks: usize,
    pub truncated: bool,
    pub repr_conflicts: usize,
    pub orientation_conflicts: usize,
    pub transfer_conflicts: usize,
    /// State-graph edges removed because the union skeleton lacks them.
    pub skeleton_drops: usize,
    /// Queries issued across all rounds and states, including repeats.
    pub query_count: usize,
    /// Distinct queries, canonical order.
    pub queries: Vec<MultiIndex>,
}

#[derive(Clone, Debug)]
pub struct McdResult {
    /// All-indicators-on graph after orientation transfer.
    pub union: Pdag,
    pub union_raw: Pdag,
    /// One run per state, bits ascending; the last one is the union state.
    pub states: Vec<StateRun>,
    pub table: StateTable,
    pub j_set: BTreeSet<MultiIndex>,
    pub diag: McdDiag,
}

impl McdResult {
    /// Anything that makes the output less than fully supported.
    pub fn has_conflicts(&self) -> bool {
        self.diag.best_effort
            || self.diag.truncated
            || self.diag.repr_conflicts > 0
            || self.diag.orientation_conflicts > 0
            || self.diag.transfer_conflicts > 0
    }
}

/// State-local answer: represented queries read the state table (inactive
/// means independent), everything else asks the marked test. A regime
/// answer is recorded for the next round and treated as dependent, which
/// makes the no-marks round reproduce the union graph.
pub fn pseudo_cit<E: MarkedCit>(
    engine: &mut E,
    table: &StateTable,
    bits: usize,
    q: &MultiIndex,
    j_new: &mut BTreeSet<MultiIndex>,
) -> Result<bool, CoreError> {
    if let Some(active) = table.value(q, bits) {
        return Ok(!active);
    }
    let v = engine.query(q)?;
    match v.mark {
        Mark::Independent => Ok(true),
        Mark::Dependent => Ok(false),
        Mark::Regime => {
            j_new.insert(q.clone());
            Ok(false)
        }
    }
}

/// Discovery for one state; returns the run and the fresh regime marks.
pub fn run_cd_state<E: MarkedCit>(
    engine: &mut E,
    table: &StateTable,
    bits: usize,
    node_count: usize,
    opts: CdOpts,
) -> Result<(CdOutput, BTreeSet<MultiIndex>), CoreError> {
    let mut j_new = BTreeSet::new();
    let mut cit = |q: &MultiIndex| pseudo_cit(engine, table, bits, q, &mut j_new);
    let out = run_cd(&mut cit, node_count, opts)?;
    Ok((out, j_new))
}

/// The full loop over a marked-test engine.
pub fn run_mcd<E>(
    engine: &mut E,
    node_count: usize,
    opts: &McdOpts,
) -> Result<McdResult, CoreError>
where
    E: MarkedCit + ImplicationOracle,
{
    if opts.iteration_cap == 0 {
        return Err(CoreError::invalid("iteration cap must be positive"));
    }
    let cd_opts = CdOpts {
        max_cond: opts.max_cond,
    };
    let mut j_set: BTreeSet<MultiIndex> = BTreeSet::new();
    let mut diag = McdDiag::default();
    let mut seen: BTreeSet<MultiIndex> = BTreeSet::new();
    loop {
        diag.iterations += 1;
        let table = construct_state_space(&j_set, engine, opts.kappa_cap)?;
        let mut outs: Vec<(usize, CdOutput)> = Vec::new();
        let mut fresh: BTreeSet<MultiIndex> = BTreeSet::new();
        for bits in table.states() {
            let (out, j_new) = run_cd_state(engine, &table, bits, node_count, cd_opts)?;
            diag.query_count += out.queries.len();
            seen.extend(out.queries.iter().cloned());
            fresh.extend(j_new.into_iter().filter(|j| !j_set.contains(j)));
            outs.push((bits, out));
        }
        let done = fresh.is_empty();
        if done || diag.iterations >= opts.iteration_cap {
            diag.best_effort = !done;
            diag.unresolved_marks = fresh.len();
            diag.truncated = table.truncated;
            diag.repr_conflicts = table.repr_conflicts;
            diag.queries = seen.into_iter().collect();
            return assemble(outs, table, j_set, diag);
        }
        j_set.extend(fresh);
    }
}

fn assemble(
    outs: Vec<(usize, CdOutput)>,
    table: StateTable,
    j_set: BTreeSet<MultiIndex>,
    mut diag: McdDiag,
) -> Result<McdResult, CoreError> {
    let union_raw = outs
        .last()
        .map(|(_, o)| o.graph.clone())
        .ok_or_else(|| CoreError::invalid("state space produced no states"))?;
    let union_pairs: BTreeSet<(usize, usize)> = union_raw.skeleton_pairs().into_iter().collect();
    let mut enforced: Vec<Pdag> = Vec::with_capacity(outs.len());
    for (_, out) in &outs {
        let mut g = out.graph.clone();
        for pair in g.skeleton_pairs() {
            if !union_pairs.contains(&pair) {
                g.remove_edge(pair.0, pair.1);
                diag.skeleton_drops += 1;
            }
        }
        enforced.push(g);
    }
    diag.orientation_conflicts = outs.iter().map(|(_, o)| o.orientation_conflicts).sum();
    let (union, transferred, transfer_conflicts) = transfer_orientations(&union_raw, &enforced);
    diag.transfer_conflicts = transfer_conflicts;
    let states = outs
        .into_iter()
        .zip(transferred)
        .map(|((bits, out), graph)| StateRun {
            bits,
            graph,
            raw: out.graph,
            sepsets: out.sepsets,
            orientation_conflicts: out.orientation_conflicts,
        })
        .collect();
    Ok(McdResult {
        union,
        union_raw,
        states,
        table,
        j_set,
        diag,
    })
}

/// Ground-truth marked answer: separation checked in every state of the
/// model, mixed verdicts are regime dependences.
pub fn marked_oracle(spec: &ScmSpec, q: &MultiIndex) -> Result<Mark, CoreError> {
    let mut any_sep = false;
    let mut any_dep = false;
    for bits in 0..(1usize << spec.kappa()) {
        if spec.state_dag(bits).d_separated(q)? {
            any_sep = true;
        } else {
            any_dep = true;
        }
    }
    Ok(match (any_sep, any_dep) {
        (true, false) => Mark::Independent,
        (false, true) => Mark::Dependent,
        _ => Mark::Regime,
    })
}

/// Infinite-sample engine over a known model. Marked answers come from
/// per-state separation; an implication holds when every state separating
/// all left-hand queries also separates the right-hand one.
#[derive(Clone, Debug)]
pub struct OracleEngine {
    dags: Vec<Dag>,
    memo: BTreeMap<MultiIndex, MarkedValue>,
    imp_memo: BTreeMap<(Vec<MultiIndex>, MultiIndex), bool>,
}

impl OracleEngine {
    pub fn from_spec(spec: &ScmSpec) -> Self {
        let dags = (0..(1usize << spec.kappa()))
            .map(|bits| spec.state_dag(bits))
            .collect();
        OracleEngine {
            dags,
            memo: BTreeMap::new(),
            imp_memo: BTreeMap::new(),
        }
    }

    /// Engine over explicit state DAGs (all assumed reachable).
    pub fn from_dags(dags: Vec<Dag>) -> Result<Self, CoreError> {
        if dags.is_empty() {
            return Err(CoreError::invalid("oracle needs at least one state"));
        }
        let n = dags[0].node_count();
        if dags.iter().any(|d| d.node_count() != n) {
            return Err(CoreError::invalid("state DAGs disagree on node count"));
        }
        Ok(OracleEngine {
            dags,
            memo: BTreeMap::new(),
            imp_memo: BTreeMap::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.dags[0].node_count()
    }

    fn profile(&self, q: &MultiIndex) -> Result<Vec<bool>, CoreError> {
        self.dags.iter().map(|d| d.d_separated(q)).collect()
    }
}

impl MarkedCit for OracleEngine {
    fn query(&mut self, q: &MultiIndex) -> Result<MarkedValue, CoreError> {
        if let Some(v) = self.memo.get(q) {
            return Ok(v.clone());
        }
        let profile = self.profile(q)?;
        let mark = if profile.iter().all(|&s| s) {
            Mark::Independent
        } else if profile.iter().all(|&s| !s) {
            Mark::Dependent
        } else {
            Mark::Regime
        };
        let v = MarkedValue {
            mark,
            diag: CitDiag::default(),
        };
        self.memo.insert(q.clone(), v.clone());
        Ok(v)
    }

    fn memo(&self) -> &BTreeMap<MultiIndex, MarkedValue> {
        &self.memo
    }
}

impl ImplicationOracle for OracleEngine {
    fn implies(&mut self, lhs: &[MultiIndex], rhs: &MultiIndex) -> Result<bool, CoreError> {
        if lhs.is_empty() {
            return Err(CoreError::invalid("implication needs a non-empty left side"));
        }
        let mut key: Vec<MultiIndex> = lhs.to_vec();
        key.sort();
        key.dedup();
        let key = (key, rhs.clone());
        if let Some(&v) = self.imp_memo.get(&key) {
            return Ok(v);
        }
        let mut holds = true;
        for d in &self.dags {
            let lhs_all_sep = key
                .0
                .iter()
                .map(|j| d.d_separated(j))
                .collect::<Result<Vec<bool>, CoreError>>()?
                .into_iter()
                .all(|s| s);
            if lhs_all_sep && !d.d_separated(rhs)? {
                holds = false;
                break;
            }
        }
        self.imp_memo.insert(key, holds);
        Ok(holds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::cpdag_of;
    use crate::scm::{ChangingEdge, Indicator, NoiseSpec};
    use alloc::vec;

    fn two_state_spec() -> ScmSpec {
        // 0 -> 1 -> 2 with 0 -> 1 changing
        let dag = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
        let indicator =
            Indicator::from_values(vec![true, true, false, false, true, false]).unwrap();
        ScmSpec::from_parts(
            0,
            dag,
            &[0.8, 0.7],
            vec![NoiseSpec::Normal { sigma: 1.0 }; 3],
            vec![ChangingEdge {
                parent: 0,
                child: 1,
                indicator,
            }],
        )
        .unwrap()
    }

    #[test]
    fn marked_oracle_three_values() {
        let spec = two_state_spec();
        let q = |x, y, z: &[usize]| MultiIndex::new(x, y, z.to_vec()).unwrap();
        assert_eq!(marked_oracle(&spec, &q(0, 1, &[])).unwrap(), Mark::Regime);
        assert_eq!(
            marked_oracle(&spec, &q(1, 2, &[])).unwrap(),
            Mark::Dependent
        );
        assert_eq!(
            marked_oracle(&spec, &q(0, 2, &[1])).unwrap(),
            Mark::Independent
        );
        // dependent through the chain only while the changing edge is on
        assert_eq!(marked_oracle(&spec, &q(0, 2, &[])).unwrap(), Mark::Regime);
    }

    #[test]
    fn oracle_engine_matches_marked_oracle_and_memoizes() {
        let spec = two_state_spec();
        let mut e = OracleEngine::from_spec(&spec);
        let q = MultiIndex::new(0, 2, vec![]).unwrap();
        let v1 = e.query(&q).unwrap();
        assert_eq!(v1.mark, marked_oracle(&spec, &q).unwrap());
        assert_eq!(e.memo().len(), 1);
        let v2 = e.query(&q).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn oracle_implication_is_state_containment() {
        let spec = two_state_spec();
        let mut e = OracleEngine::from_spec(&spec);
        let j01 = MultiIndex::new(0, 1, vec![]).unwrap();
        let j02 = MultiIndex::new(0, 2, vec![]).unwrap();
        let j12 = MultiIndex::new(1, 2, vec![]).unwrap();
        // 0 -* 1 and 0 -* 2 share the single changing edge as their regime
        assert!(e.implies(&[j01.clone()], &j02).unwrap());
        assert!(e.implies(&[j02.clone()], &j01).unwrap());
        // 1 -> 2 is always dependent, never implied independent
        assert!(!e.implies(&[j01.clone()], &j12).unwrap());
        // a never-separated left side makes the implication vacuous
        assert!(e.implies(&[j12.clone()], &j01).unwrap());
        assert!(e.implies(&[j01.clone(), j02.clone()], &j02).unwrap());
        assert!(e.implies(&[], &j01).is_err());
    }

    #[test]
    fn run_mcd_two_states_recovers_both_graphs() {
        let spec = two_state_spec();
        let mut e = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut e, 3, &McdOpts::default()).unwrap();
        assert!(!r.diag.best_effort);
        assert_eq!(r.table.kappa(), 1);
        assert_eq!(r.states.len(), 2);
        // off state: only 1 - 2 remains
        assert_eq!(r.states[0].bits, 0);
        assert!(!r.states[0].graph.has_edge(0, 1));
        assert!(r.states[0].graph.has_edge(1, 2));
        // on state equals the union and matches the full model's pattern
        assert_eq!(r.states[1].bits, 1);
        assert_eq!(r.union_raw, r.states[1].raw);
        assert_eq!(r.union_raw, cpdag_of(spec.dag()));
        assert!(r.j_set.contains(&MultiIndex::new(0, 1, vec![]).unwrap()));
        assert_eq!(r.diag.skeleton_drops, 0);
        assert_eq!(r.diag.transfer_conflicts, 0);
    }

    #[test]
    fn run_mcd_stationary_model_single_state() {
        let dag = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
        let spec = ScmSpec::from_parts(
            0,
            dag.clone(),
            &[1.0, -1.0],
            vec![NoiseSpec::Normal { sigma: 1.0 }; 3],
            vec![],
        )
        .unwrap();
        let mut e = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut e, 3, &McdOpts::default()).unwrap();
        assert_eq!(r.diag.iterations, 1);
        assert_eq!(r.table.kappa(), 0);
        assert_eq!(r.states.len(), 1);
        assert_eq!(r.union, cpdag_of(&dag));
        assert!(r.j_set.is_empty());
        assert!(!r.has_conflicts());
    }

    #[test]
    fn first_round_graph_is_union_graph() {
        let spec = two_state_spec();
        // round 1 by hand: empty table, single state
        let mut e = OracleEngine::from_spec(&spec);
        let table = StateTable::default();
        let (out, j_new) =
            run_cd_state(&mut e, &table, 0, 3, CdOpts::default()).unwrap();
        assert!(!j_new.is_empty());
        let mut e2 = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut e2, 3, &McdOpts::default()).unwrap();
        assert_eq!(out.graph, r.union_raw);
    }

    #[test]
    fn oracle_fixpoint_within_two_iterations() {
        let spec = two_state_spec();
        let mut e = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut e, 3, &McdOpts::default()).unwrap();
        assert!(r.diag.iterations <= 2);
        assert_eq!(r.diag.unresolved_marks, 0);
    }

    #[test]
    fn iteration_cap_flags_best_effort() {
        let spec = two_state_spec();
        let mut e = OracleEngine::from_spec(&spec);
        let opts = McdOpts {
            iteration_cap: 1,
            ..McdOpts::default()
        };
        let r = run_mcd(&mut e, 3, &opts).unwrap();
        assert!(r.diag.best_effort);
        assert!(r.diag.unresolved_marks > 0);
        assert!(r.has_conflicts());
        // the capped round still reports the union graph
        assert_eq!(r.union_raw, cpdag_of(spec.dag()));
    }
}
