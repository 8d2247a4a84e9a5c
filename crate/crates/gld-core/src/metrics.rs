// SPDX-License-Identifier: MIT
//! Evaluation metrics and reference baselines. The sliding-window
//! baseline picks its cutoffs against the supplied truth, so it reports
//! an upper bound for that method, not a deployable procedure.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::graph::{Dag, MultiIndex, Pdag};
use crate::num::norm_cdf;
use crate::pc::{run_cd, CdOpts, CdOutput};
use crate::{blocks, CoreError};

/// Precision, recall, f1 over unordered pair sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Conventions: empty prediction with empty truth is perfect;
    /// precision is 0 when nothing was predicted but truth exists;
    /// recall is 1 when there is nothing to find.
    pub fn from_sets(
        pred: &BTreeSet<(usize, usize)>,
        truth: &BTreeSet<(usize, usize)>,
    ) -> Prf {
        let tp = pred.intersection(truth).count() as f64;
        let precision = if pred.is_empty() {
            if truth.is_empty() {
                1.0
            } else {
                0.0
            }
        } else {
            tp / pred.len() as f64
        };
        let recall = if truth.is_empty() {
            1.0
        } else {
            tp / truth.len() as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

/// Pairs present in some state graphs and absent in others.
pub fn changing_pairs_from_states(graphs: &[Pdag]) -> BTreeSet<(usize, usize)> {
    let mut union: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut inter: Option<BTreeSet<(usize, usize)>> = None;
    for g in graphs {
        let pairs: BTreeSet<(usize, usize)> = g.skeleton_pairs().into_iter().collect();
        union.extend(pairs.iter().copied());
        inter = Some(match inter {
            None => pairs,
            Some(prev) => prev.intersection(&pairs).copied().collect(),
        });
    }
    let inter = inter.unwrap_or_default();
    union.difference(&inter).copied().collect()
}

/// Score a predicted changing-pair set against the true changing pairs.
pub fn regime_prf(
    predicted: &BTreeSet<(usize, usize)>,
    truth_changing: &BTreeSet<(usize, usize)>,
) -> Prf {
    Prf::from_sets(predicted, truth_changing)
}

/// Skeleton agreement between a predicted graph and the true DAG.
pub fn union_skeleton_prf(predicted: &Pdag, truth: &Dag) -> Prf {
    let pred: BTreeSet<(usize, usize)> = predicted.skeleton_pairs().into_iter().collect();
    let mut t: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (child, parent) in truth.edge_list() {
        t.insert((child.min(parent), child.max(parent)));
    }
    Prf::from_sets(&pred, &t)
}

fn full_z_independent(
    data: &Dataset,
    q: &MultiIndex,
    lo: usize,
    hi: usize,
    alpha: f64,
) -> Result<bool, CoreError> {
    let x = &data.col(q.x())[lo..hi];
    let y = &data.col(q.y())[lo..hi];
    let zcols: Vec<&[f64]> = q.z().iter().map(|&i| &data.col(i)[lo..hi]).collect();
    let (z, sigma) = blocks::full_data_z(x, y, &zcols)?;
    let p = 2.0 * norm_cdf(-libm::fabs(z) / sigma);
    Ok(p >= alpha)
}

/// Single full-data discovery run; its regime prediction is empty.
pub fn vanilla_cd(data: &Dataset, alpha: f64, opts: CdOpts) -> Result<CdOutput, CoreError> {
    let mut cit = |q: &MultiIndex| full_z_independent(data, q, 0, data.n(), alpha);
    run_cd(&mut cit, data.k(), opts)
}

/// Per-window presence counts plus the truth-optimal cutoff prediction.
#[derive(Clone, Debug)]
pub struct SlidingReport {
    pub window_count: usize,
    /// Windowed discovery graphs in window order.
    pub windows: Vec<Pdag>,
    /// Skeleton presence count per pair; absent pairs count zero.
    pub counts: BTreeMap<(usize, usize), usize>,
    /// None means the empty prediction won the sweep.
    pub best_cutoffs: Option<(usize, usize)>,
    pub best_set: BTreeSet<(usize, usize)>,
    pub best: Prf,
}

/// Sweep the empty prediction and every interior cutoff pair; ties keep
/// the earliest candidate, so stationary data resolves to no changes.
pub fn best_cutoffs(
    counts: &BTreeMap<(usize, usize), usize>,
    window_count: usize,
    truth_changing: &BTreeSet<(usize, usize)>,
) -> (Option<(usize, usize)>, BTreeSet<(usize, usize)>, Prf) {
    let mut best_cut = None;
    let mut best_set = BTreeSet::new();
    let mut best = Prf::from_sets(&best_set, truth_changing);
    for a_lo in 1..window_count {
        for a_hi in a_lo..window_count {
            let pred: BTreeSet<(usize, usize)> = counts
                .iter()
                .filter(|(_, &c)| a_lo <= c && c <= a_hi)
                .map(|(&p, _)| p)
                .collect();
            let prf = Prf::from_sets(&pred, truth_changing);
            if prf.f1 > best.f1 {
                best_cut = Some((a_lo, a_hi));
                best_set = pred;
                best = prf;
            }
        }
    }
    (best_cut, best_set, best)
}

/// Non-overlapping windows, full-data test per window, cutoff sweep
/// against the supplied truth. The trailing partial window is dropped.
pub fn sliding_window_baseline(
    data: &Dataset,
    window_size: usize,
    alpha: f64,
    max_cond: Option<usize>,
    truth_changing: &BTreeSet<(usize, usize)>,
) -> Result<SlidingReport, CoreError> {
    if window_size < 8 {
        return Err(CoreError::invalid("window size must be at least 8"));
    }
    let window_count = data.n() / window_size;
    if window_count == 0 {
        return Err(CoreError::invalid("window size exceeds sample count"));
    }
    // the full-data test needs window_size >= |Z| + 4
    let cap = window_size - 4;
    let user = max_cond.unwrap_or_else(|| data.k().saturating_sub(2));
    let opts = CdOpts {
        max_cond: Some(user.min(cap)),
    };
    let mut windows = Vec::with_capacity(window_count);
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for t in 0..window_count {
        let lo = t * window_size;
        let hi = lo + window_size;
        let mut cit = |q: &MultiIndex| full_z_independent(data, q, lo, hi, alpha);
        let out = run_cd(&mut cit, data.k(), opts)?;
        for pair in out.graph.skeleton_pairs() {
            *counts.entry(pair).or_insert(0) += 1;
        }
        windows.push(out.graph);
    }
    let (best_cutoffs, best_set, best) = self::best_cutoffs(&counts, window_count, truth_changing);
    Ok(SlidingReport {
        window_count,
        windows,
        counts,
        best_cutoffs,
        best_set,
        best,
    })
}
