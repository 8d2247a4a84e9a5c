// SPDX-License-Identifier: MIT
//! End-to-end discovery against infinite-sample oracles: the returned
//! per-state graphs must be exactly the true state CPDAGs.

mod common;

use std::collections::BTreeSet;

use gld_core::graph::{cpdag_of, Dag, Pdag};
use gld_core::mcd::{marked_oracle, run_mcd, McdOpts, OracleEngine};
use gld_core::mcit::{Mark, MarkedCit};
use gld_core::metrics::changing_pairs_from_states;
use gld_core::scm::{ChangingEdge, Indicator, NoiseSpec, ScmSpec};
use gld_core::state_space::transfer_orientations;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_modular_spec(rng: &mut ChaCha8Rng, n: usize, n_changing: usize) -> ScmSpec {
    let dag = loop {
        let d = common::random_dag(rng, n, 0.5);
        if d.edge_count() >= n_changing {
            break d;
        }
    };
    let picks = rand::seq::index::sample(rng, dag.edge_count(), n_changing).into_vec();
    let edges = dag.edge_list();
    let changing: Vec<ChangingEdge> = picks
        .into_iter()
        .map(|i| ChangingEdge {
            parent: edges[i].1,
            child: edges[i].0,
            indicator: Indicator::from_values(vec![true, false]).unwrap(),
        })
        .collect();
    ScmSpec::from_parts(
        0,
        dag.clone(),
        &vec![1.0; dag.edge_count()],
        vec![NoiseSpec::Normal { sigma: 1.0 }; n],
        changing,
    )
    .unwrap()
}

fn truth_state_cpdags(spec: &ScmSpec) -> BTreeSet<Pdag> {
    (0..(1usize << spec.kappa()))
        .map(|bits| cpdag_of(&spec.state_dag(bits)))
        .collect()
}

#[test]
fn random_modular_oracles_recover_state_cpdag_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..60 {
        let n = 4 + i % 3;
        let kappa = i % 3;
        let spec = random_modular_spec(&mut rng, n, kappa);
        let mut engine = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut engine, n, &McdOpts::default()).unwrap();
        assert!(!r.diag.best_effort, "model {i} hit the iteration cap");
        assert_eq!(r.diag.skeleton_drops, 0, "model {i} dropped edges");
        let got: BTreeSet<Pdag> = r.states.iter().map(|s| s.raw.clone()).collect();
        assert_eq!(
            got,
            truth_state_cpdags(&spec),
            "model {i}: dag {:?} changing {:?}",
            spec.dag().edge_list(),
            spec.changing_pairs()
        );
        assert_eq!(r.union_raw, cpdag_of(spec.dag()), "model {i} union");
    }
}

#[test]
fn union_graph_equals_all_marked_dependent_run() {
    // treating every regime answer as dependent must reproduce the union
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..20 {
        let spec = random_modular_spec(&mut rng, 5, 1 + i % 2);
        let mut engine = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut engine, 5, &McdOpts::default()).unwrap();
        let mut plain = |q: &gld_core::graph::MultiIndex| {
            Ok(marked_oracle(&spec, q)? == Mark::Independent)
        };
        let direct =
            gld_core::pc::run_cd(&mut plain, 5, gld_core::pc::CdOpts::default()).unwrap();
        assert_eq!(r.union_raw, direct.graph);
        // the all-ones state is the union state
        assert_eq!(r.states.last().unwrap().raw, r.union_raw);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = random_modular_spec(&mut rng, 5, 2);
    let mut e1 = OracleEngine::from_spec(&spec);
    let mut e2 = OracleEngine::from_spec(&spec);
    let r1 = run_mcd(&mut e1, 5, &McdOpts::default()).unwrap();
    let r2 = run_mcd(&mut e2, 5, &McdOpts::default()).unwrap();
    assert_eq!(r1.union, r2.union);
    assert_eq!(r1.j_set, r2.j_set);
    assert_eq!(r1.diag.queries, r2.diag.queries);
    assert_eq!(r1.diag.query_count, r2.diag.query_count);
    assert_eq!(
        r1.states.iter().map(|s| &s.graph).collect::<Vec<_>>(),
        r2.states.iter().map(|s| &s.graph).collect::<Vec<_>>()
    );
    assert_eq!(e1.memo(), e2.memo());
}

#[test]
fn two_independent_indicators_give_four_states() {
    // chain with two far-apart changing links
    let dag = Dag::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    let mk = || Indicator::from_values(vec![true, false]).unwrap();
    let spec = ScmSpec::from_parts(
        0,
        dag.clone(),
        &[1.0; 4],
        vec![NoiseSpec::Normal { sigma: 1.0 }; 5],
        vec![
            ChangingEdge {
                parent: 0,
                child: 1,
                indicator: mk(),
            },
            ChangingEdge {
                parent: 2,
                child: 3,
                indicator: mk(),
            },
        ],
    )
    .unwrap();
    let mut engine = OracleEngine::from_spec(&spec);
    let r = run_mcd(&mut engine, 5, &McdOpts::default()).unwrap();
    assert_eq!(r.table.kappa(), 2);
    assert_eq!(r.states.len(), 4);
    let raws: Vec<Pdag> = r.states.iter().map(|s| s.raw.clone()).collect();
    let predicted = changing_pairs_from_states(&raws);
    let expected: BTreeSet<(usize, usize)> = [(0, 1), (2, 3)].into_iter().collect();
    assert_eq!(predicted, expected);
    assert_eq!(
        raws.iter().cloned().collect::<BTreeSet<Pdag>>(),
        truth_state_cpdags(&spec)
    );
}

#[test]
fn transfer_is_idempotent_on_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let spec = random_modular_spec(&mut rng, 5, 2);
        let mut engine = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut engine, 5, &McdOpts::default()).unwrap();
        let graphs: Vec<Pdag> = r.states.iter().map(|s| s.graph.clone()).collect();
        let (u2, s2, conflicts) = transfer_orientations(&r.union, &graphs);
        assert_eq!(conflicts, 0);
        assert_eq!(u2, r.union);
        assert_eq!(s2, graphs);
    }
}

#[test]
fn oracle_state_count_is_monotone_in_indicators() {
    let dag = Dag::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let mk = || Indicator::from_values(vec![true, false]).unwrap();
    let mut counts = Vec::new();
    for kappa in 0..=2 {
        let changing: Vec<ChangingEdge> = [(0usize, 1usize), (2, 3)][..kappa]
            .iter()
            .map(|&(p, c)| ChangingEdge {
                parent: p,
                child: c,
                indicator: mk(),
            })
            .collect();
        let spec = ScmSpec::from_parts(
            0,
            dag.clone(),
            &[1.0; 3],
            vec![NoiseSpec::Normal { sigma: 1.0 }; 4],
            changing,
        )
        .unwrap();
        let mut engine = OracleEngine::from_spec(&spec);
        let r = run_mcd(&mut engine, 4, &McdOpts::default()).unwrap();
        counts.push(r.states.len());
    }
    assert_eq!(counts, vec![1, 2, 4]);
}
