// SPDX-License-Identifier: MIT
//! Graph-layer checks against independent oracles: moralization for
//! d-separation, exhaustive Markov-equivalence grouping for CPDAGs.

mod common;

use std::collections::BTreeMap;

use gld_core::graph::{cpdag_of, Dag, EdgeMark};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn dag_enumeration_counts() {
    assert_eq!(common::enumerate_dags(2).len(), 3);
    assert_eq!(common::enumerate_dags(3).len(), 25);
    assert_eq!(common::enumerate_dags(4).len(), 543);
}

#[test]
fn dsep_matches_moralization_exhaustively() {
    for n in [3, 4] {
        let queries = common::all_queries(n);
        for dag in common::enumerate_dags(n) {
            for q in &queries {
                assert_eq!(
                    dag.d_separated(q).unwrap(),
                    common::dsep_moral(&dag, q),
                    "dag {:?} query {:?}",
                    dag.edge_list(),
                    q
                );
            }
        }
    }
}

#[test]
fn dsep_matches_moralization_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let queries = common::all_queries(6);
    for _ in 0..200 {
        let dag = common::random_dag(&mut rng, 6, 0.45);
        for q in &queries {
            assert_eq!(dag.d_separated(q).unwrap(), common::dsep_moral(&dag, q));
        }
    }
}

fn vstructures(dag: &Dag) -> Vec<(usize, usize, usize)> {
    let n = dag.node_count();
    let mut out = Vec::new();
    for c in 0..n {
        let ps = dag.parents(c);
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                if !dag.has_edge(a, b) && !dag.has_edge(b, a) {
                    out.push((a, c, b));
                }
            }
        }
    }
    out
}

fn skeleton(dag: &Dag) -> Vec<(usize, usize)> {
    let mut s: Vec<(usize, usize)> = dag
        .edge_list()
        .into_iter()
        .map(|(c, p)| (c.min(p), c.max(p)))
        .collect();
    s.sort_unstable();
    s
}

#[test]
fn cpdag_respects_skeleton_and_truth_directions() {
    for dag in common::enumerate_dags(4) {
        let cp = cpdag_of(&dag);
        let cp_skel: Vec<(usize, usize)> = cp.skeleton_pairs().into_iter().collect();
        assert_eq!(cp_skel, skeleton(&dag));
        for ((a, b), mark) in cp.edges() {
            match mark {
                EdgeMark::Undirected => {}
                EdgeMark::AToB => assert!(dag.has_edge(a, b)),
                EdgeMark::BToA => assert!(dag.has_edge(b, a)),
            }
        }
    }
}

#[test]
fn cpdag_identifies_markov_equivalence_classes() {
    // same skeleton and v-structures iff same CPDAG (Verma-Pearl)
    for n in [3, 4] {
        let mut by_class: BTreeMap<(Vec<(usize, usize)>, Vec<(usize, usize, usize)>), Vec<Dag>> =
            BTreeMap::new();
        for dag in common::enumerate_dags(n) {
            by_class
                .entry((skeleton(&dag), vstructures(&dag)))
                .or_default()
                .push(dag);
        }
        let mut cpdags = Vec::new();
        for (_, members) in by_class {
            let cp = cpdag_of(&members[0]);
            for m in &members[1..] {
                assert_eq!(cpdag_of(m), cp, "equivalent DAGs must share a CPDAG");
            }
            cpdags.push(cp);
        }
        let distinct = cpdags.len();
        cpdags.sort();
        cpdags.dedup();
        assert_eq!(cpdags.len(), distinct, "distinct classes must differ");
    }
}
