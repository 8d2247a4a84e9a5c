// SPDX-License-Identifier: MIT
//! DAGs, partially directed graphs, d-separation, Meek closure, CPDAGs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::CoreError;

/// Canonical encoding of a CI query: x < y, z strictly sorted, z disjoint
/// from {x, y}. The universal cache and result key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    x: usize,
    y: usize,
    z: Vec<usize>,
}

impl MultiIndex {
    pub fn new(x: usize, y: usize, z: impl Into<Vec<usize>>) -> Result<Self, CoreError> {
        if x == y {
            return Err(CoreError::invalid("multi-index with x == y"));
        }
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        let mut z = z.into();
        z.sort_unstable();
        z.dedup();
        if z.contains(&x) || z.contains(&y) {
            return Err(CoreError::invalid("conditioning set overlaps tested pair"));
        }
        Ok(MultiIndex { x, y, z })
    }

    pub fn x(&self) -> usize {
        self.x
    }

    pub fn y(&self) -> usize {
        self.y
    }

    pub fn z(&self) -> &[usize] {
        &self.z
    }

    /// Unordered tested pair, canonically (min, max).
    pub fn pair(&self) -> (usize, usize) {
        (self.x, self.y)
    }

    pub fn max_node(&self) -> usize {
        self.z.iter().copied().fold(self.y, usize::max)
    }
}

/// Directed acyclic graph as sorted parent lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dag {
    node_count: usize,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Edges are (parent, child) pairs.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, CoreError> {
        let mut parents = alloc::vec![Vec::new(); node_count];
        for &(p, c) in edges {
            if p >= node_count || c >= node_count {
                return Err(CoreError::invalid("edge endpoint out of range"));
            }
            if p == c {
                return Err(CoreError::invalid("self-loop"));
            }
            parents[c].push(p);
        }
        for ps in &mut parents {
            ps.sort_unstable();
            ps.dedup();
        }
        let dag = Dag {
            node_count,
            parents,
        };
        dag.topo_order()?;
        Ok(dag)
    }

    pub fn from_parents(parents: Vec<Vec<usize>>) -> Result<Self, CoreError> {
        let node_count = parents.len();
        let edges: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
            .collect();
        Dag::new(node_count, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn has_edge(&self, parent: usize, child: usize) -> bool {
        self.parents[child].binary_search(&parent).is_ok()
    }

    /// (child, parent) pairs, child-major ascending; the canonical edge order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((c, p));
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    pub fn children_lists(&self) -> Vec<Vec<usize>> {
        let mut ch = alloc::vec![Vec::new(); self.node_count];
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                ch[p].push(c);
            }
        }
        ch
    }

    /// Kahn's algorithm with a sorted ready set; deterministic.
    pub fn topo_order(&self) -> Result<Vec<usize>, CoreError> {
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let children = self.children_lists();
        let mut ready: BTreeSet<usize> = (0..self.node_count)
            .filter(|&i| indeg[i] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.node_count);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != self.node_count {
            return Err(CoreError::Cycle);
        }
        Ok(order)
    }

    /// Copy with the listed (parent, child) edges removed; missing edges are
    /// ignored. Removal cannot create a cycle.
    pub fn without_edges(&self, off: &[(usize, usize)]) -> Dag {
        let mut parents = self.parents.clone();
        for &(p, c) in off {
            if c < parents.len() {
                parents[c].retain(|&q| q != p);
            }
        }
        Dag {
            node_count: self.node_count,
            parents,
        }
    }

    /// set plus all its ancestors.
    pub fn ancestors_of(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if out.insert(p) {
                    stack.push(p);
                }
            }
        }
        out
    }

    /// Standard d-separation by reachability over (node, direction) states.
    pub fn d_separated(&self, q: &MultiIndex) -> Result<bool, CoreError> {
        if q.max_node() >= self.node_count {
            return Err(CoreError::invalid("query node out of range"));
        }
        let z: BTreeSet<usize> = q.z().iter().copied().collect();
        let anz = self.ancestors_of(&z);
        let children = self.children_lists();
        // (node, entered_from_child); start as if entered from a child.
        let mut visited: BTreeSet<(usize, bool)> = BTreeSet::new();
        let mut stack = alloc::vec![(q.x(), true)];
        while let Some((v, up)) = stack.pop() {
            if !visited.insert((v, up)) {
                continue;
            }
            if v == q.y() {
                return Ok(false); // active trail reaches y (y is never in z)
            }
            if up {
                if !z.contains(&v) {
                    for &p in &self.parents[v] {
                        stack.push((p, true));
                    }
                    for &c in &children[v] {
                        stack.push((c, false));
                    }
                }
            } else {
                if !z.contains(&v) {
                    for &c in &children[v] {
                        stack.push((c, false));
                    }
                }
                if anz.contains(&v) {
                    for &p in &self.parents[v] {
                        stack.push((p, true));
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Union of parent sets; errors if the union is cyclic.
pub fn union_dag(dags: &[Dag]) -> Result<Dag, CoreError> {
    let first = dags
        .first()
        .ok_or_else(|| CoreError::invalid("empty dag list"))?;
    let n = first.node_count;
    if dags.iter().any(|d| d.node_count != n) {
        return Err(CoreError::invalid("node count mismatch"));
    }
    let mut parents = alloc::vec![BTreeSet::new(); n];
    for d in dags {
        for (c, ps) in d.parents.iter().enumerate() {
            parents[c].extend(ps.iter().copied());
        }
    }
    Dag::from_parents(parents.into_iter().map(|s| s.into_iter().collect()).collect())
}

/// Edge mark for the pair (a, b) with a < b.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeMark {
    Undirected,
    AToB,
    BToA,
}

/// Partially directed graph over canonical pairs (a < b).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pdag {
    node_count: usize,
    edges: BTreeMap<(usize, usize), EdgeMark>,
}

impl Pdag {
    pub fn new(node_count: usize) -> Self {
        Pdag {
            node_count,
            edges: BTreeMap::new(),
        }
    }

    pub fn complete(node_count: usize) -> Self {
        let mut g = Pdag::new(node_count);
        for b in 0..node_count {
            for a in 0..b {
                g.edges.insert((a, b), EdgeMark::Undirected);
            }
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    fn key(a: usize, b: usize) -> (usize, usize) {
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn insert_undirected(&mut self, a: usize, b: usize) {
        debug_assert!(a != b && a < self.node_count && b < self.node_count);
        self.edges.insert(Self::key(a, b), EdgeMark::Undirected);
    }

    /// Inserts or reorients from -> to.
    pub fn insert_directed(&mut self, from: usize, to: usize) {
        let mark = if from < to {
            EdgeMark::AToB
        } else {
            EdgeMark::BToA
        };
        self.edges.insert(Self::key(from, to), mark);
    }

    pub fn remove_edge(&mut self, a: usize, b: usize) {
        self.edges.remove(&Self::key(a, b));
    }

    pub fn mark(&self, a: usize, b: usize) -> Option<EdgeMark> {
        self.edges.get(&Self::key(a, b)).copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&Self::key(a, b))
    }

    pub fn is_directed(&self, from: usize, to: usize) -> bool {
        match self.mark(from, to) {
            Some(EdgeMark::AToB) => from < to,
            Some(EdgeMark::BToA) => from > to,
            _ => false,
        }
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.mark(a, b) == Some(EdgeMark::Undirected)
    }

    /// Canonical pairs with marks, ascending.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), EdgeMark)> + '_ {
        self.edges.iter().map(|(&k, &m)| (k, m))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn skeleton_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.edges.keys().copied().collect()
    }

    pub fn adjacent(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (&(a, b), _) in &self.edges {
            if a == v {
                out.push(b);
            } else if b == v {
                out.push(a);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Meek rules R1-R4 to fixpoint. Only undirected edges are ever oriented;
/// directed marks are never flipped. Deterministic scan order. Returns
/// whether anything changed.
pub fn meek_closure(g: &mut Pdag) -> bool {
    let mut changed_any = false;
    loop {
        let mut changed = false;
        let und: Vec<(usize, usize)> = g
            .edges()
            .filter(|&(_, m)| m == EdgeMark::Undirected)
            .map(|(k, _)| k)
            .collect();
        for (a, b) in und {
            if !g.is_undirected(a, b) {
                continue; // oriented earlier in this scan
            }
            if meek_try_orient(g, a, b) {
                g.insert_directed(a, b);
                changed = true;
            } else if meek_try_orient(g, b, a) {
                g.insert_directed(b, a);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        changed_any = true;
    }
    changed_any
}

/// True if some Meek rule compels x -> y for the undirected edge {x, y}.
fn meek_try_orient(g: &Pdag, x: usize, y: usize) -> bool {
    let n = g.node_count();
    // R1: w -> x, w and y non-adjacent.
    for w in 0..n {
        if w != y && g.is_directed(w, x) && !g.has_edge(w, y) {
            return true;
        }
    }
    // R2: x -> c -> y.
    for c in 0..n {
        if c != x && c != y && g.is_directed(x, c) && g.is_directed(c, y) {
            return true;
        }
    }
    // R3: x - c, x - d, c -> y, d -> y, c and d non-adjacent.
    let adj_x: Vec<usize> = g.adjacent(x);
    for (i, &c) in adj_x.iter().enumerate() {
        if c == y || !g.is_undirected(x, c) || !g.is_directed(c, y) {
            continue;
        }
        for &d in &adj_x[i + 1..] {
            if d == y || !g.is_undirected(x, d) || !g.is_directed(d, y) {
                continue;
            }
            if !g.has_edge(c, d) {
                return true;
            }
        }
    }
    // R4: d -> c -> y with x adjacent to d and y, d and y non-adjacent.
    for c in 0..n {
        if c == x || c == y || !g.is_directed(c, y) {
            continue;
        }
        for d in 0..n {
            if d == x || d == y || d == c {
                continue;
            }
            if g.is_directed(d, c) && g.has_edge(x, d) && !g.has_edge(d, y) {
                return true;
            }
        }
    }
    false
}

/// CPDAG of a DAG: skeleton, v-structures, Meek closure.
pub fn cpdag_of(g: &Dag) -> Pdag {
    let n = g.node_count();
    let mut p = Pdag::new(n);
    for (c, parent) in g.edge_list() {
        p.insert_undirected(parent, c);
    }
    // v-structures: non-adjacent parents a, b of c compel a -> c <- b.
    for c in 0..n {
        let pa = g.parents(c);
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !g.has_edge(a, b) && !g.has_edge(b, a) {
                    p.insert_directed(a, c);
                    p.insert_directed(b, c);
                }
            }
        }
    }
    meek_closure(&mut p);
    p
}
