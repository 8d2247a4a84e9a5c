// SPDX-License-Identifier: MIT
//! Marked conditional independence testing.
//!
//! A query is answered in three grades: Independent, Dependent, or Regime
//! (dependence that switches on and off along the series). Composition is
//! homogeneity-first: a homogeneity test on block scores decides whether a
//! plain full-data test suffices; only heterogeneous score series proceed
//! to the weak-regime acceptance test.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::blocks::{full_data_z, score_series, subset_score, ScoreSeries};
use crate::data::Dataset;
use crate::graph::MultiIndex;
use crate::num::{binom_sf, mean, norm_cdf, norm_inv_cdf, norm_pdf};
use crate::CoreError;

/// Prior belief about regime segment length; selects block heuristics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimePrior {
    /// No scale information; blocks grow with log N.
    Generic,
    /// Segments known to be long (roughly 500+ samples).
    Large,
}

/// Test-level knobs. Block sizes and cutoffs are derived per query from
/// the prior, the sample count, and the conditioning-set size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperSet {
    pub prior: RegimePrior,
    /// Level of the homogeneity and full-data dependence tests.
    pub alpha: f64,
    /// Level of the weak-regime acceptance interval.
    pub alpha_weak: f64,
    /// Initial low-quantile mass for the homogeneity count.
    pub beta0: f64,
    /// Minimum candidate blocks for any regime claim.
    pub n0_min: usize,
}

impl HyperSet {
    pub fn new(prior: RegimePrior) -> Self {
        HyperSet {
            prior,
            alpha: 0.05,
            alpha_weak: 0.05,
            beta0: 0.1,
            n0_min: 5,
        }
    }

    pub fn generic() -> Self {
        Self::new(RegimePrior::Generic)
    }

    pub fn large() -> Self {
        Self::new(RegimePrior::Large)
    }

    /// Round half away from zero, then force at least two residual degrees
    /// of freedom (b >= |z|+5); the block-count floor of five (b <= n/5)
    /// wins over everything, leaving the dof-exhausted corner reachable.
    fn clamp_b(raw: f64, n: usize, z_dim: usize) -> usize {
        let rounded = libm::round(raw) as i64;
        let floored = rounded.max((z_dim + 5) as i64) as usize;
        floored.min(n / 5)
    }

    /// Block size for the homogeneity stage.
    pub fn hom_b(&self, n: usize, z_dim: usize) -> usize {
        let raw = match self.prior {
            RegimePrior::Generic => 5.0 * libm::log10(n as f64) - 3.0 + 1.5 * z_dim as f64,
            RegimePrior::Large => 30.0 + 1.5 * z_dim as f64,
        };
        Self::clamp_b(raw, n, z_dim)
    }

    /// Block size for the weak-regime stage.
    pub fn weak_b(&self, n: usize, z_dim: usize) -> usize {
        let raw = match self.prior {
            RegimePrior::Generic => 11.0 + 1.6 * z_dim as f64,
            RegimePrior::Large => 31.0 + 1.4 * z_dim as f64,
        };
        Self::clamp_b(raw, n, z_dim)
    }

    /// Score cutoff below which a block counts as near-independent.
    pub fn cutoff_c(&self, z_dim: usize) -> f64 {
        match self.prior {
            RegimePrior::Generic => 0.275 - 0.00125 * z_dim as f64,
            RegimePrior::Large => 0.2,
        }
    }
}

impl Default for HyperSet {
    fn default() -> Self {
        Self::generic()
    }
}

/// E[X | X < c] for X ~ N(mu, sigma^2). Far below the truncation point the
/// ratio underflows; the conditional mass then sits at c.
pub fn trunc_normal_mean(mu: f64, sigma: f64, c: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    let beta = (c - mu) / sigma;
    if beta < -38.0 {
        return c;
    }
    let mass = norm_cdf(beta);
    if mass <= 0.0 {
        return c;
    }
    mu - sigma * norm_pdf(beta) / mass
}

/// Analytic lower beta-quantile of the per-block score distribution under
/// one regime: mean score plus the normal quantile offset.
pub fn quantile_lower_analytic(series: &ScoreSeries, beta: f64) -> f64 {
    debug_assert!(!series.scores.is_empty());
    mean(&series.scores) + norm_inv_cdf(beta) * series.sigma_b
}

/// Bootstrap lower beta-quantile: scores of n_boot pseudo-blocks drawn as
/// unaligned random b-subsets of all rows. Deliberately unaligned; aligned
/// resampling reproduces the observed block distribution and over-controls.
pub fn quantile_lower_bootstrap(
    data: &Dataset,
    q: &MultiIndex,
    b: usize,
    beta: f64,
    n_boot: usize,
    seed: u64,
) -> Result<f64, CoreError> {
    if n_boot < 200 {
        return Err(CoreError::invalid("bootstrap needs n_boot >= 200"));
    }
    if !(0.0..1.0).contains(&beta) || beta <= 0.0 {
        return Err(CoreError::invalid("beta must lie in (0, 1)"));
    }
    let z_dim = q.z().len();
    if b < z_dim + 4 {
        return Err(CoreError::DofExhausted { b, z_dim });
    }
    let n = data.n();
    if b > n || q.max_node() >= data.k() {
        return Err(CoreError::invalid("bootstrap block exceeds data"));
    }
    let x = data.col(q.x());
    let y = data.col(q.y());
    let zs: Vec<&[f64]> = q.z().iter().map(|&i| data.col(i)).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let idx = rand::seq::index::sample(&mut rng, n, b).into_vec();
        scores.push(subset_score(x, y, &zs, &idx).0);
    }
    scores.sort_by(f64::total_cmp);
    let rank = libm::ceil(beta * n_boot as f64) as usize;
    Ok(scores[rank.clamp(1, n_boot) - 1])
}

/// Homogeneity decision record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomOutcome {
    pub reject: bool,
    /// P(K > k) for K ~ Binom(theta, beta); valid under one regime.
    pub p0: f64,
    /// Enlarged low-quantile mass actually used.
    pub beta: f64,
    /// Smallest significant low-block count (theta + 1 when unreachable).
    pub k0: usize,
    /// Observed low-block count.
    pub k: usize,
    /// Quantile threshold the count was taken against.
    pub q: f64,
    pub theta: usize,
    /// Too few blocks to decide; treated as homogeneous.
    pub no_decision: bool,
}

/// Rejection threshold k0 for the count of low blocks, then the largest
/// beta in [beta0, 1) still controlled at alpha with that threshold.
/// Enlarging beta tightens the match between nominal and actual level
/// lost to integer rounding of the count.
fn hom_threshold(theta: usize, beta0: f64, alpha: f64) -> (usize, f64) {
    let mut k0 = None;
    for k in 1..=theta {
        if binom_sf(theta as u64, beta0, (k - 1) as u64) < alpha {
            k0 = Some(k);
            break;
        }
    }
    let Some(k0) = k0 else {
        // even k = theta is insignificant; no rejection is possible
        return (theta + 1, beta0);
    };
    let mut lo = beta0;
    let mut hi = 1.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if binom_sf(theta as u64, mid, (k0 - 1) as u64) <= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (k0, lo)
}

/// Decision core shared by the analytic and bootstrap quantile routes.
pub fn homogeneity_decide(series: &ScoreSeries, hyper: &HyperSet, q: f64, beta: f64, k0: usize) -> HomOutcome {
    let theta = series.scores.len();
    let k = series.scores.iter().filter(|s| **s < q).count();
    let p0 = binom_sf(theta as u64, beta, k as u64);
    HomOutcome {
        reject: p0 < hyper.alpha,
        p0,
        beta,
        k0,
        k,
        q,
        theta,
        no_decision: false,
    }
}

/// One-regime null test on a block score series. Counts blocks under the
/// lower beta-quantile; under one regime that count is Binom(theta, beta).
pub fn homogeneity_test(series: &ScoreSeries, hyper: &HyperSet) -> HomOutcome {
    let theta = series.scores.len();
    if theta < 5 {
        return HomOutcome {
            reject: false,
            p0: 1.0,
            beta: hyper.beta0,
            k0: 0,
            k: 0,
            q: 0.0,
            theta,
            no_decision: true,
        };
    }
    let (k0, beta) = hom_threshold(theta, hyper.beta0, hyper.alpha);
    let q = quantile_lower_analytic(series, beta);
    homogeneity_decide(series, hyper, q, beta, k0)
}

/// Weak-regime decision record. Scores are oriented so the full-series
/// mean is non-negative before anything else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakOutcome {
    pub independent: bool,
    /// Blocks scoring under the cutoff.
    pub n_c: usize,
    /// Mean score of those blocks (oriented scale).
    pub m: f64,
    /// Acceptance interval.
    pub lo: f64,
    pub hi: f64,
    /// Cutoff used for selection.
    pub c: f64,
    /// All scores were negated to orient the mean.
    pub negated: bool,
}

/// Tests whether the low-scoring blocks look like a truly independent
/// regime: their mean must land in an interval around the truncated-normal
/// mean of a zero-centred score below c.
pub fn weak_regime_test(series: &ScoreSeries, hyper: &HyperSet) -> WeakOutcome {
    let c = hyper.cutoff_c(series.z_dim);
    let negated = mean(&series.scores) < 0.0;
    let sign = if negated { -1.0 } else { 1.0 };
    let selected: Vec<f64> = series
        .scores
        .iter()
        .map(|s| sign * s)
        .filter(|s| *s < c)
        .collect();
    let n_c = selected.len();
    if n_c < hyper.n0_min {
        return WeakOutcome {
            independent: false,
            n_c,
            m: 0.0,
            lo: 0.0,
            hi: 0.0,
            c,
            negated,
        };
    }
    let m = mean(&selected);
    let half = series.sigma_b * norm_inv_cdf(1.0 - hyper.alpha_weak / 2.0) / libm::sqrt(n_c as f64);
    let lo = trunc_normal_mean(0.0, series.sigma_b, c) - half;
    let hi = half;
    WeakOutcome {
        independent: m >= lo && m <= hi,
        n_c,
        m,
        lo,
        hi,
        c,
        negated,
    }
}

/// Three-valued test answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Independent,
    Dependent,
    Regime,
}

/// Route taken and the evidence gathered along it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CitDiag {
    /// Block scoring was impossible at the weak block size; a full-data
    /// test decided alone and Regime was out of reach.
    pub fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak: Option<WeakOutcome>,
    /// Two-sided p of the full-data test when that route ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedValue {
    pub mark: Mark,
    pub diag: CitDiag,
}

/// Answers marked queries. Implementations must be deterministic and
/// memoize by canonical query.
pub trait MarkedCit {
    fn query(&mut self, q: &MultiIndex) -> Result<MarkedValue, CoreError>;
    fn memo(&self) -> &BTreeMap<MultiIndex, MarkedValue>;
}

/// Data-backed test engine with per-run caches.
#[derive(Clone, Debug)]
pub struct DataEngine<'a> {
    data: &'a Dataset,
    hyper: HyperSet,
    memo: BTreeMap<MultiIndex, MarkedValue>,
    series_cache: BTreeMap<(MultiIndex, usize), ScoreSeries>,
    full_cache: BTreeMap<MultiIndex, (f64, f64)>,
    pub(crate) imp_memo: BTreeMap<(Vec<MultiIndex>, MultiIndex), bool>,
}

impl<'a> DataEngine<'a> {
    pub fn new(data: &'a Dataset, hyper: HyperSet) -> Result<Self, CoreError> {
        if data.n() < 50 {
            return Err(CoreError::invalid("need at least 50 samples"));
        }
        Ok(DataEngine {
            data,
            hyper,
            memo: BTreeMap::new(),
            series_cache: BTreeMap::new(),
            full_cache: BTreeMap::new(),
            imp_memo: BTreeMap::new(),
        })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn hyper(&self) -> &HyperSet {
        &self.hyper
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    fn cols(&self, q: &MultiIndex) -> Result<(&'a [f64], &'a [f64], Vec<&'a [f64]>), CoreError> {
        if q.max_node() >= self.data.k() {
            return Err(CoreError::invalid("query node out of range"));
        }
        let zs = q.z().iter().map(|&i| self.data.col(i)).collect();
        Ok((self.data.col(q.x()), self.data.col(q.y()), zs))
    }

    /// Block score series at block size b, cached.
    pub fn series(&mut self, q: &MultiIndex, b: usize) -> Result<ScoreSeries, CoreError> {
        let key = (q.clone(), b);
        if let Some(s) = self.series_cache.get(&key) {
            return Ok(s.clone());
        }
        let (x, y, zs) = self.cols(q)?;
        let s = score_series(x, y, &zs, b)?;
        self.series_cache.insert(key, s.clone());
        Ok(s)
    }

    /// Full-data Fisher z and its sd, cached.
    pub fn full_z(&mut self, q: &MultiIndex) -> Result<(f64, f64), CoreError> {
        if let Some(&v) = self.full_cache.get(q) {
            return Ok(v);
        }
        let (x, y, zs) = self.cols(q)?;
        let v = full_data_z(x, y, &zs)?;
        self.full_cache.insert(q.clone(), v);
        Ok(v)
    }

    fn full_data_mark(&mut self, q: &MultiIndex) -> Result<(Mark, f64), CoreError> {
        let (z, sigma) = self.full_z(q)?;
        let p = 2.0 * norm_cdf(-libm::fabs(z) / sigma);
        let mark = if p >= self.hyper.alpha {
            Mark::Independent
        } else {
            Mark::Dependent
        };
        Ok((mark, p))
    }
}

impl MarkedCit for DataEngine<'_> {
    fn query(&mut self, q: &MultiIndex) -> Result<MarkedValue, CoreError> {
        if let Some(v) = self.memo.get(q) {
            return Ok(v.clone());
        }
        let n = self.data.n();
        let z_dim = q.z().len();
        let weak_b = self.hyper.weak_b(n, z_dim);
        let value = if weak_b < z_dim + 5 {
            // block scale out of degrees of freedom
            let (mark, p) = self.full_data_mark(q)?;
            MarkedValue {
                mark,
                diag: CitDiag {
                    fallback: true,
                    hom: None,
                    weak: None,
                    full_p: Some(p),
                },
            }
        } else {
            let hom_series = self.series(q, self.hyper.hom_b(n, z_dim))?;
            let hom = homogeneity_test(&hom_series, &self.hyper);
            if !hom.reject {
                let (mark, p) = self.full_data_mark(q)?;
                MarkedValue {
                    mark,
                    diag: CitDiag {
                        fallback: false,
                        hom: Some(hom),
                        weak: None,
                        full_p: Some(p),
                    },
                }
            } else {
                let weak_series = self.series(q, weak_b)?;
                let weak = weak_regime_test(&weak_series, &self.hyper);
                let mark = if weak.independent {
                    Mark::Regime
                } else {
                    Mark::Dependent
                };
                MarkedValue {
                    mark,
                    diag: CitDiag {
                        fallback: false,
                        hom: Some(hom),
                        weak: Some(weak),
                        full_p: None,
                    },
                }
            }
        };
        self.memo.insert(q.clone(), value.clone());
        Ok(value)
    }

    fn memo(&self) -> &BTreeMap<MultiIndex, MarkedValue> {
        &self.memo
    }
}

/// One-shot marked test without an engine.
pub fn marked_cit(
    data: &Dataset,
    q: &MultiIndex,
    hyper: &HyperSet,
) -> Result<MarkedValue, CoreError> {
    DataEngine::new(data, *hyper)?.query(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn series(scores: Vec<f64>, b: usize, z_dim: usize) -> ScoreSeries {
        let sigma_b = 1.0 / libm::sqrt((b - 3 - z_dim) as f64);
        ScoreSeries {
            scores,
            b,
            z_dim,
            sigma_b,
            degenerate: 0,
        }
    }

    #[test]
    fn hyper_frozen_values() {
        let g = HyperSet::generic();
        let l = HyperSet::large();
        assert_eq!(g.hom_b(10_000, 0), 17);
        assert_eq!(l.weak_b(10_000, 20), 59);
        assert_eq!(l.hom_b(100, 0), 20); // block-count floor wins
        assert_eq!(g.weak_b(10_000, 20), 43);
        assert_abs_diff_eq!(g.cutoff_c(20), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(l.cutoff_c(7), 0.2, epsilon = 1e-15);
        // dof floor: raw 11 lifted to z + 5
        assert_eq!(g.weak_b(10_000, 10), 27);
        assert_eq!(g.weak_b(10_000, 20), 43);
        assert_eq!(g.hom_b(50, 0), 5);
        // cap below the dof floor leaves the exhausted corner reachable
        assert_eq!(g.weak_b(50, 6), 10);
    }

    #[test]
    fn trunc_normal_mean_frozen() {
        assert_abs_diff_eq!(
            trunc_normal_mean(0.0, 1.0, 0.0),
            -0.7978845608028654,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            trunc_normal_mean(0.0, 2.0, 0.0),
            2.0 * -0.7978845608028654,
            epsilon = 1e-12
        );
        // no truncation in the far upper tail
        assert_abs_diff_eq!(trunc_normal_mean(1.5, 1.0, 1e9), 1.5, epsilon = 1e-12);
        // far lower tail collapses onto the cutoff
        assert_eq!(trunc_normal_mean(0.0, 1.0, -40.0), -40.0);
        assert_abs_diff_eq!(
            trunc_normal_mean(0.0, 0.2, 0.2),
            -0.2 * norm_pdf(1.0) / norm_cdf(1.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn analytic_quantile() {
        let s = series(vec![1.0; 12], 20, 0);
        assert_abs_diff_eq!(quantile_lower_analytic(&s, 0.5), 1.0, epsilon = 0.0);
        let expect = 1.0 + norm_inv_cdf(0.1) / libm::sqrt(17.0);
        assert_abs_diff_eq!(quantile_lower_analytic(&s, 0.1), expect, epsilon = 1e-13);
    }

    #[test]
    fn hom_threshold_examples() {
        // theta = 10, beta0 = 0.1, alpha = 0.05: sf(10, 0.1, 2) ~= 0.0702,
        // sf(10, 0.1, 3) ~= 0.0128, so k0 = 4 and beta grows past 0.1.
        let (k0, beta) = hom_threshold(10, 0.1, 0.05);
        assert_eq!(k0, 4);
        assert!(beta > 0.1 && beta < 1.0);
        assert!(binom_sf(10, beta, 3) <= 0.05);
        assert!(binom_sf(10, beta + 1e-9, 3) > 0.05);
        // alpha below beta0^theta: no k works, sentinel blocks rejection
        let (k0, beta) = hom_threshold(3, 0.5, 0.05);
        assert_eq!(k0, 4);
        assert_eq!(beta, 0.5);
    }

    #[test]
    fn homogeneity_flat_series_keeps_null() {
        let s = series(vec![0.3; 10], 28, 0);
        let h = homogeneity_test(&s, &HyperSet::large());
        assert!(!h.reject && !h.no_decision);
        assert_eq!(h.k, 0);
        // k = 0 leaves p0 = 1 - (1-beta)^theta
        let expect = 1.0 - libm::pow(1.0 - h.beta, 10.0);
        assert_abs_diff_eq!(h.p0, expect, epsilon = 1e-12);
        assert!(h.q < 0.3);
    }

    #[test]
    fn homogeneity_split_series_rejects() {
        let mut scores = vec![-5.0; 6];
        scores.extend(vec![5.0; 4]);
        let s = series(scores, 28, 0);
        let h = homogeneity_test(&s, &HyperSet::large());
        assert!(h.reject);
        assert_eq!(h.k, 6);
        assert!(h.k >= h.k0);
        assert!(h.p0 < 0.05);
    }

    #[test]
    fn homogeneity_small_theta_no_decision() {
        let s = series(vec![1.0, -1.0, 1.0, -1.0], 28, 0);
        let h = homogeneity_test(&s, &HyperSet::large());
        assert!(h.no_decision && !h.reject);
    }

    #[test]
    fn homogeneity_p0_matches_enumeration() {
        // exhaustive binomial mass for theta <= 12
        let mut scores = vec![-2.0; 3];
        scores.extend(vec![0.5; 9]);
        let s = series(scores, 28, 0);
        let h = homogeneity_test(&s, &HyperSet::large());
        let mut direct = 0.0;
        for j in (h.k + 1)..=12 {
            let mut comb = 1.0;
            for i in 0..j {
                comb *= (12 - i) as f64 / (j - i) as f64;
            }
            direct += comb * libm::pow(h.beta, j as f64) * libm::pow(1.0 - h.beta, (12 - j) as f64);
        }
        assert_abs_diff_eq!(h.p0, direct, epsilon = 1e-12);
    }

    /// 200 low blocks at v0 and 40 high blocks at 0.9, sigma_b = 0.2.
    fn weak_series(v0: f64) -> ScoreSeries {
        let mut scores = vec![v0; 200];
        scores.extend(vec![0.9; 40]);
        series(scores, 28, 0)
    }

    #[test]
    fn weak_accepts_inside_interval() {
        let hyper = HyperSet::large();
        let w = weak_regime_test(&weak_series(-0.03), &hyper);
        assert!(w.independent && !w.negated);
        assert_eq!(w.n_c, 200);
        assert_abs_diff_eq!(w.c, 0.2, epsilon = 0.0);
        assert_abs_diff_eq!(w.lo, -0.057519995 - 0.027718585, epsilon = 1e-6);
        assert_abs_diff_eq!(w.hi, 0.027718585, epsilon = 1e-6);
        assert_abs_diff_eq!(w.m, -0.03, epsilon = 1e-12);
    }

    #[test]
    fn weak_rejects_outside_interval() {
        let hyper = HyperSet::large();
        // low blocks too negative: residual dependence of opposite sign
        assert!(!weak_regime_test(&weak_series(-0.12), &hyper).independent);
        // low blocks clearly positive beyond the sampling band
        assert!(!weak_regime_test(&weak_series(0.1), &hyper).independent);
    }

    #[test]
    fn weak_orientation_is_sign_invariant() {
        let hyper = HyperSet::large();
        let base = weak_series(-0.03);
        let flipped = series(base.scores.iter().map(|s| -s).collect(), 28, 0);
        let a = weak_regime_test(&base, &hyper);
        let b = weak_regime_test(&flipped, &hyper);
        assert!(b.negated);
        assert_eq!(a.independent, b.independent);
        assert_abs_diff_eq!(a.m, b.m, epsilon = 1e-15);
    }

    #[test]
    fn weak_gate_on_candidate_count() {
        let hyper = HyperSet::large();
        // only 4 blocks under the cutoff
        let mut scores = vec![-0.03; 4];
        scores.extend(vec![0.9; 30]);
        let w = weak_regime_test(&series(scores, 28, 0), &hyper);
        assert!(!w.independent);
        assert_eq!(w.n_c, 4);
    }

    #[test]
    fn weak_alpha_monotone() {
        // accepted at alpha_w stays accepted at any smaller alpha_w
        let mut tight = HyperSet::large();
        tight.alpha_weak = 0.2;
        let mut wide = HyperSet::large();
        wide.alpha_weak = 0.01;
        for v0 in [-0.08, -0.05, -0.03, 0.0, 0.02, 0.05] {
            let s = weak_series(v0);
            if weak_regime_test(&s, &tight).independent {
                assert!(weak_regime_test(&s, &wide).independent);
            }
        }
    }

    /// Two interleaved deterministic patterns; enough structure for the
    /// engine plumbing tests without any randomness.
    fn toy_dataset(n: usize) -> Dataset {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.37).sin() + (i as f64 * 0.11).cos())
            .collect();
        let z: Vec<f64> = (0..n).map(|i| (i as f64 * 0.53).cos()).collect();
        let w: Vec<f64> = (0..n).map(|i| (i as f64 * 0.29).sin()).collect();
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.19).cos()).collect();
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.23).sin()).collect();
        let p: Vec<f64> = (0..n).map(|i| (i as f64 * 0.41).cos()).collect();
        let s: Vec<f64> = (0..n).map(|i| (i as f64 * 0.47).sin()).collect();
        Dataset::from_cols(vec![x, y, z, w, u, v, p, s]).unwrap()
    }

    #[test]
    fn engine_validates_and_memoizes() {
        let data = toy_dataset(49);
        assert!(DataEngine::new(&data, HyperSet::generic()).is_err());
        let data = toy_dataset(400);
        let mut eng = DataEngine::new(&data, HyperSet::generic()).unwrap();
        let q = MultiIndex::new(0, 1, vec![2]).unwrap();
        let flipped = MultiIndex::new(1, 0, vec![2]).unwrap();
        let a = eng.query(&q).unwrap();
        let b = eng.query(&flipped).unwrap();
        assert_eq!(a, b);
        assert_eq!(eng.memo().len(), 1);
    }

    #[test]
    fn engine_dof_exhausted_falls_back() {
        // n = 50 caps b at 10; |z| = 6 leaves one residual dof
        let data = toy_dataset(50);
        let mut eng = DataEngine::new(&data, HyperSet::generic()).unwrap();
        let q = MultiIndex::new(0, 1, vec![2, 3, 4, 5, 6, 7]).unwrap();
        let v = eng.query(&q).unwrap();
        assert!(v.diag.fallback);
        assert!(v.diag.hom.is_none());
        assert_ne!(v.mark, Mark::Regime);
    }

    #[test]
    fn marked_cit_deterministic() {
        let data = toy_dataset(600);
        let q = MultiIndex::new(0, 1, vec![]).unwrap();
        let hyper = HyperSet::generic();
        assert_eq!(
            marked_cit(&data, &q, &hyper).unwrap(),
            marked_cit(&data, &q, &hyper).unwrap()
        );
    }

    #[test]
    fn bootstrap_guards() {
        let data = toy_dataset(400);
        let q = MultiIndex::new(0, 1, vec![]).unwrap();
        assert!(quantile_lower_bootstrap(&data, &q, 20, 0.1, 100, 7).is_err());
        assert!(quantile_lower_bootstrap(&data, &q, 3, 0.1, 300, 7).is_err());
        assert!(quantile_lower_bootstrap(&data, &q, 500, 0.1, 300, 7).is_err());
        let a = quantile_lower_bootstrap(&data, &q, 20, 0.1, 300, 7).unwrap();
        let b = quantile_lower_bootstrap(&data, &q, 20, 0.1, 300, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_constant_data_degenerates() {
        let flat = Dataset::from_cols(vec![vec![1.0; 300], vec![2.0; 300]]).unwrap();
        let q = MultiIndex::new(0, 1, vec![]).unwrap();
        let v = quantile_lower_bootstrap(&flat, &q, 20, 0.1, 250, 3).unwrap();
        assert_eq!(v, 0.0);
    }
}
