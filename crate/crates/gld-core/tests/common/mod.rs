// SPDX-License-Identifier: MIT
//! Shared helpers for integration tests: exhaustive DAG enumeration, an
//! independent d-separation oracle via moralization, and graph shuffling.
#![allow(dead_code)]

use gld_core::graph::{Dag, EdgeMark, MultiIndex, Pdag};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Every DAG on n labeled nodes: each unordered pair is absent, forward,
/// or backward; cyclic assignments are discarded.
pub fn enumerate_dags(n: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut out = Vec::new();
    for code in 0..3usize.pow(pairs.len() as u32) {
        let mut c = code;
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for &(i, j) in &pairs {
            match c % 3 {
                0 => {}
                1 => edges.push((i, j)),
                _ => edges.push((j, i)),
            }
            c /= 3;
        }
        if let Ok(d) = Dag::new(n, &edges) {
            out.push(d);
        }
    }
    out
}

/// d-separation by moralizing the ancestral subgraph of {x, y} and z,
/// deleting z, and checking undirected connectivity. Algorithmically
/// unrelated to the library's trail reachability.
pub fn dsep_moral(dag: &Dag, q: &MultiIndex) -> bool {
    let n = dag.node_count();
    let mut in_anc = vec![false; n];
    let mut stack: Vec<usize> = vec![q.x(), q.y()];
    stack.extend(q.z().iter().copied());
    while let Some(v) = stack.pop() {
        if in_anc[v] {
            continue;
        }
        in_anc[v] = true;
        stack.extend(dag.parents(v).iter().copied());
    }
    let mut adj = vec![vec![false; n]; n];
    for v in 0..n {
        if !in_anc[v] {
            continue;
        }
        let ps = dag.parents(v);
        for &p in ps {
            adj[v][p] = true;
            adj[p][v] = true;
        }
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![q.x()];
    seen[q.x()] = true;
    while let Some(v) = stack.pop() {
        if v == q.y() {
            return false;
        }
        for w in 0..n {
            if adj[v][w] && !seen[w] && in_anc[w] && !q.z().contains(&w) {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    true
}

/// All conditional queries on n nodes (every pair, every conditioning set).
pub fn all_queries(n: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for x in 0..n {
        for y in (x + 1)..n {
            let others: Vec<usize> = (0..n).filter(|v| *v != x && *v != y).collect();
            for mask in 0..(1usize << others.len()) {
                let z: Vec<usize> = others
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                out.push(MultiIndex::new(x, y, z).unwrap());
            }
        }
    }
    out
}

/// Random DAG from a shuffled topological order with edge probability p.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((order[i], order[j]));
            }
        }
    }
    Dag::new(n, &edges).unwrap()
}

pub fn permute_dag(dag: &Dag, perm: &[usize]) -> Dag {
    let edges: Vec<(usize, usize)> = dag
        .edge_list()
        .into_iter()
        .map(|(child, parent)| (perm[parent], perm[child]))
        .collect();
    Dag::new(dag.node_count(), &edges).unwrap()
}

pub fn permute_pdag(g: &Pdag, perm: &[usize]) -> Pdag {
    let mut out = Pdag::new(g.node_count());
    for ((a, b), mark) in g.edges() {
        match mark {
            EdgeMark::Undirected => out.insert_undirected(perm[a], perm[b]),
            EdgeMark::AToB => out.insert_directed(perm[a], perm[b]),
            EdgeMark::BToA => out.insert_directed(perm[b], perm[a]),
        }
    }
    out
}
