// SPDX-License-Identifier: MIT
//! Indicator implication tests.
//!
//! Certifies claims of the form "whenever every left-hand dependence is
//! off, the right-hand dependence is off too", i.e. the right indicator is
//! dominated by the sum of the left ones. Blocks where every left score
//! sits under its cutoff are the candidate windows; the right-hand scores
//! on those windows must look independent, up to a shift that budgets for
//! impurity leaking through the selection.

use alloc::vec::Vec;

use crate::graph::MultiIndex;
use crate::mcit::{trunc_normal_mean, DataEngine, HyperSet};
use crate::num::{mean, norm_cdf, norm_inv_cdf};
use crate::CoreError;

/// Answers implication queries. Must be deterministic.
pub trait ImplicationOracle {
    fn implies(&mut self, lhs: &[MultiIndex], rhs: &MultiIndex) -> Result<bool, CoreError>;
}

const A_MIN: f64 = 0.05;

/// Oriented block scores at a uniform block size: sign flipped when the
/// full-series mean is negative, as in the weak-regime test.
fn oriented_scores(engine: &mut DataEngine<'_>, q: &MultiIndex, b: usize) -> Result<Vec<f64>, CoreError> {
    let s = engine.series(q, b)?;
    let flip = mean(&s.scores) < 0.0;
    Ok(if flip {
        s.scores.iter().map(|v| -v).collect()
    } else {
        s.scores
    })
}

fn implication_decide(
    engine: &mut DataEngine<'_>,
    lhs: &[MultiIndex],
    rhs: &MultiIndex,
) -> Result<bool, CoreError> {
    let hyper = *engine.hyper();
    let n = engine.n();
    // one block size for every involved test
    let b = lhs
        .iter()
        .chain(core::iter::once(rhs))
        .map(|q| hyper.weak_b(n, q.z().len()))
        .max()
        .expect("lhs checked non-empty");
    let mut candidates: Option<Vec<bool>> = None;
    for q in lhs {
        let scores = match oriented_scores(engine, q, b) {
            Ok(s) => s,
            Err(CoreError::DofExhausted { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        let c = hyper.cutoff_c(q.z().len());
        let low: Vec<bool> = scores.iter().map(|s| *s < c).collect();
        candidates = Some(match candidates {
            None => low,
            Some(prev) => prev.iter().zip(&low).map(|(a, b)| *a && *b).collect(),
        });
    }
    let candidates = candidates.expect("lhs non-empty");
    let rhs_scores = match oriented_scores(engine, rhs, b) {
        Ok(s) => s,
        Err(CoreError::DofExhausted { .. }) => return Ok(false),
        Err(e) => return Err(e),
    };
    let theta = rhs_scores.len();
    let selected: Vec<f64> = rhs_scores
        .iter()
        .zip(&candidates)
        .filter(|(_, keep)| **keep)
        .map(|(s, _)| *s)
        .collect();
    let n_c = selected.len();
    if n_c == 0 || n_c < hyper.n0_min {
        return Ok(false); // nothing to certify on
    }
    let z_dim = rhs.z().len();
    let sigma = 1.0 / libm::sqrt((b - 3 - z_dim) as f64);
    let c = hyper.cutoff_c(z_dim);
    let m = mean(&selected); // d0 estimate
    let d_est = mean(&rhs_scores);
    let a_est = (n_c as f64 / theta as f64).clamp(A_MIN, 1.0 - A_MIN);
    let d1_est = (d_est - a_est * m) / (1.0 - a_est);
    let half = sigma * norm_inv_cdf(1.0 - hyper.alpha_weak / 2.0) / libm::sqrt(n_c as f64);
    let lo = trunc_normal_mean(0.0, sigma, c) - half;
    // dependent mass can leak below the cutoff; shift the ceiling by its
    // estimated contribution, never downward
    let hi = half + d1_est.max(0.0) * (1.0 - norm_cdf(c / sigma));
    Ok(m >= lo && m <= hi)
}

/// Memoized implication test on a shared engine. lhs order is irrelevant;
/// the key is canonicalized.
pub fn implication_test_with_cache(
    engine: &mut DataEngine<'_>,
    lhs: &[MultiIndex],
    rhs: &MultiIndex,
) -> Result<bool, CoreError> {
    if lhs.is_empty() {
        return Err(CoreError::invalid("implication needs a non-empty lhs"));
    }
    let mut key_lhs: Vec<MultiIndex> = lhs.to_vec();
    key_lhs.sort();
    key_lhs.dedup();
    let key = (key_lhs, rhs.clone());
    if let Some(&v) = engine.imp_memo.get(&key) {
        return Ok(v);
    }
    let v = implication_decide(engine, &key.0, rhs)?;
    engine.imp_memo.insert(key, v);
    Ok(v)
}

impl ImplicationOracle for DataEngine<'_> {
    fn implies(&mut self, lhs: &[MultiIndex], rhs: &MultiIndex) -> Result<bool, CoreError> {
        implication_test_with_cache(self, lhs, rhs)
    }
}

/// One-shot implication test.
pub fn implication_test(
    data: &crate::data::Dataset,
    lhs: &[MultiIndex],
    rhs: &MultiIndex,
    hyper: &HyperSet,
) -> Result<bool, CoreError> {
    let mut engine = DataEngine::new(data, *hyper)?;
    implication_test_with_cache(&mut engine, lhs, rhs)
}
