// SPDX-License-Identifier: MIT
//! Random non-stationary linear SCM generation and simulation.
//!
//! A spec freezes everything random about a model: the DAG, signed edge
//! coefficients, per-node noise, and one on/off indicator per changing
//! edge. Simulation then only draws noise, so the same spec can be
//! re-simulated at different seeds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Cauchy, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::graph::Dag;
use crate::CoreError;

/// Noise family for one structural equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Normal { sigma: f64 },
    Laplace { b: f64 },
    Uniform { r: f64 },
    Cauchy { gamma: f64 },
    /// Beta(1/x, 5), raw support [0, 1].
    Beta { x: f64 },
    /// Equal-weight mixture of N(0,1) and N(x,1).
    MultimodalNormal { x: f64 },
    /// One concrete kind drawn per call site.
    Mixed,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        let ok = match *self {
            NoiseSpec::Normal { sigma } => sigma > 0.0 && sigma.is_finite(),
            NoiseSpec::Laplace { b } => b > 0.0 && b.is_finite(),
            NoiseSpec::Uniform { r } => r > 0.0 && r.is_finite(),
            NoiseSpec::Cauchy { gamma } => gamma > 0.0 && gamma.is_finite(),
            NoiseSpec::Beta { x } => x > 0.0 && x.is_finite(),
            NoiseSpec::MultimodalNormal { x } => x.is_finite(),
            NoiseSpec::Mixed => true,
        };
        if ok {
            Ok(())
        } else {
            Err(CoreError::invalid("noise parameter out of range"))
        }
    }
}

/// The concrete kinds Mixed resolves into, with default parameters.
const MIXED_POOL: [NoiseSpec; 6] = [
    NoiseSpec::Normal { sigma: 1.0 },
    NoiseSpec::Laplace { b: 1.0 },
    NoiseSpec::Uniform { r: 1.0 },
    NoiseSpec::Cauchy { gamma: 1.0 },
    NoiseSpec::Beta { x: 1.0 },
    NoiseSpec::MultimodalNormal { x: 2.0 },
];

fn sample_noise_with(rng: &mut ChaCha8Rng, spec: &NoiseSpec, n: usize) -> Result<Vec<f64>, CoreError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(n);
    match *spec {
        NoiseSpec::Normal { sigma } => {
            let d = Normal::new(0.0, sigma).expect("validated");
            for _ in 0..n {
                out.push(rng.sample(d));
            }
        }
        NoiseSpec::Laplace { b } => {
            // inverse CDF; t clamped away from 0 so the tail stays finite
            for _ in 0..n {
                let t = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let u = t - 0.5;
                let mag = -b * libm::log(1.0 - 2.0 * u.abs());
                out.push(if u < 0.0 {
                    -mag
                } else if u > 0.0 {
                    mag
                } else {
                    0.0
                });
            }
        }
        NoiseSpec::Uniform { r } => {
            for _ in 0..n {
                out.push(rng.gen_range(-r..r));
            }
        }
        NoiseSpec::Cauchy { gamma } => {
            let d = Cauchy::new(0.0, gamma).expect("validated");
            for _ in 0..n {
                out.push(rng.sample(d));
            }
        }
        NoiseSpec::Beta { x } => {
            let d = BetaDist::new(1.0 / x, 5.0).expect("validated");
            for _ in 0..n {
                out.push(rng.sample(d));
            }
        }
        NoiseSpec::MultimodalNormal { x } => {
            for _ in 0..n {
                let low = rng.gen::<bool>();
                let z: f64 = rng.sample(StandardNormal);
                out.push(z + if low { 0.0 } else { x });
            }
        }
        NoiseSpec::Mixed => {
            let kind = MIXED_POOL[rng.gen_range(0..MIXED_POOL.len())];
            return sample_noise_with(rng, &kind, n);
        }
    }
    Ok(out)
}

/// n i.i.d. draws from the given family.
pub fn sample_noise(spec: &NoiseSpec, n: usize, seed: u64) -> Result<Vec<f64>, CoreError> {
    sample_noise_with(&mut ChaCha8Rng::seed_from_u64(seed), spec, n)
}

/// Meta-model for indicator sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorMeta {
    /// Segment length scale bounds (samples); the scale is log-uniform.
    pub ell_min: f64,
    pub ell_max: f64,
    /// Log-scale width of segment lengths around the scale.
    pub gamma: f64,
    /// Range the independent-regime fraction is drawn from.
    pub regime_fraction_range: (f64, f64),
}

impl IndicatorMeta {
    pub fn validate(&self) -> Result<(), CoreError> {
        let (a_lo, a_hi) = self.regime_fraction_range;
        let ok = self.ell_min > 0.0
            && self.ell_max >= self.ell_min
            && self.gamma > 0.0
            && 0.0 < a_lo
            && a_lo <= a_hi
            && a_hi < 1.0;
        if ok {
            Ok(())
        } else {
            Err(CoreError::invalid("indicator meta out of range"))
        }
    }
}

impl Default for IndicatorMeta {
    fn default() -> Self {
        IndicatorMeta {
            ell_min: 500.0,
            ell_max: 1250.0,
            gamma: 0.3,
            regime_fraction_range: (0.3, 0.7),
        }
    }
}

/// On/off trajectory of one changing edge; true = edge active.
/// Serialized as a '0'/'1' string to keep spec files readable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Indicator {
    values: Vec<bool>,
}

impl Indicator {
    /// Rejects trivial indicators; an edge that never switches is not a
    /// changing edge.
    pub fn from_values(values: Vec<bool>) -> Result<Self, CoreError> {
        let has_on = values.iter().any(|v| *v);
        let has_off = values.iter().any(|v| !*v);
        if !(has_on && has_off) {
            return Err(CoreError::invalid("indicator must take both values"));
        }
        Ok(Indicator { values })
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples with the edge active.
    pub fn active_fraction(&self) -> f64 {
        self.values.iter().filter(|v| **v).count() as f64 / self.values.len() as f64
    }
}

impl Serialize for Indicator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let text: String = self.values.iter().map(|v| if *v { '1' } else { '0' }).collect();
        s.serialize_str(&text)
    }
}

impl<'de> Deserialize<'de> for Indicator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        let mut values = Vec::with_capacity(text.len());
        for ch in text.chars() {
            match ch {
                '0' => values.push(false),
                '1' => values.push(true),
                _ => return Err(serde::de::Error::custom("indicator digit must be 0 or 1")),
            }
        }
        Indicator::from_values(values).map_err(|_| serde::de::Error::custom("trivial indicator"))
    }
}

/// Draws an indicator of length n targeting independent fraction a.
///
/// Segment lengths are log-normal around a log-uniform scale; regimes
/// alternate starting active; active lengths scale by 2(1-a) and inactive
/// by 2a so the expected inactive fraction is a; the first segment gets a
/// uniform phase multiplier. A truncation that ends up trivial is
/// resampled a bounded number of times.
pub fn sample_indicator(
    n: usize,
    meta: &IndicatorMeta,
    a: f64,
    seed: u64,
) -> Result<Indicator, CoreError> {
    meta.validate()?;
    if !(0.0..1.0).contains(&a) || a <= 0.0 {
        return Err(CoreError::invalid("fraction a must lie in (0, 1)"));
    }
    if (n as f64) < 2.0 * meta.ell_min {
        return Err(CoreError::invalid("series shorter than two scale lengths"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ln_lo = libm::log(meta.ell_min);
    let ln_hi = libm::log(meta.ell_max);
    for _ in 0..100 {
        let ln_ell = ln_lo + rng.gen::<f64>() * (ln_hi - ln_lo);
        let mut values = Vec::with_capacity(n);
        let mut active = true;
        let mut first = true;
        while values.len() < n {
            let z: f64 = rng.sample(StandardNormal);
            let raw = libm::exp(ln_ell + meta.gamma * z);
            let mult = if active { 2.0 * (1.0 - a) } else { 2.0 * a };
            let mut len = raw * mult;
            if first {
                len *= rng.gen::<f64>();
                first = false;
            }
            let k = (libm::round(len) as usize).max(1);
            for _ in 0..k {
                if values.len() == n {
                    break;
                }
                values.push(active);
            }
            active = !active;
        }
        if values.iter().any(|v| *v) && values.iter().any(|v| !*v) {
            return Indicator::from_values(values);
        }
    }
    Err(CoreError::RetryExhausted)
}

fn generate_dag_with(
    rng: &mut ChaCha8Rng,
    node_count: usize,
    max_parents: usize,
    link_budget: usize,
) -> Result<Dag, CoreError> {
    // node i in causal order owns min(i, max_parents) parent slots
    let slots: Vec<usize> = (0..node_count).map(|i| i.min(max_parents)).collect();
    let total: usize = slots.iter().sum();
    if link_budget > total {
        return Err(CoreError::invalid("link budget exceeds legal slots"));
    }
    let chosen = rand::seq::index::sample(rng, total, link_budget);
    let mut per_node = alloc::vec![0usize; node_count];
    {
        let mut bounds = Vec::with_capacity(node_count + 1);
        let mut acc = 0;
        bounds.push(0);
        for s in &slots {
            acc += s;
            bounds.push(acc);
        }
        for slot in chosen.iter() {
            let node = bounds.partition_point(|&b| b <= slot) - 1;
            per_node[node] += 1;
        }
    }
    let mut edges = Vec::with_capacity(link_budget);
    for (i, &k) in per_node.iter().enumerate() {
        if k == 0 {
            continue;
        }
        for p in rand::seq::index::sample(rng, i, k).iter() {
            edges.push((p, i));
        }
    }
    // random relabeling decouples index order from causal order
    let mut perm: Vec<usize> = (0..node_count).collect();
    perm.shuffle(rng);
    let relabeled: Vec<(usize, usize)> = edges.iter().map(|&(p, c)| (perm[p], perm[c])).collect();
    Dag::new(node_count, &relabeled)
}

/// DAG with exactly link_budget edges drawn uniformly over parent slots.
pub fn generate_dag(
    node_count: usize,
    max_parents: usize,
    link_budget: usize,
    seed: u64,
) -> Result<Dag, CoreError> {
    generate_dag_with(
        &mut ChaCha8Rng::seed_from_u64(seed),
        node_count,
        max_parents,
        link_budget,
    )
}

/// One changing edge with its trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangingEdge {
    pub parent: usize,
    pub child: usize,
    pub indicator: Indicator,
}

/// Generation knobs for random specs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmGenConfig {
    pub node_count: usize,
    pub max_parents: usize,
    pub link_budget: usize,
    pub changing_links: usize,
    pub n: usize,
    /// Coefficient magnitudes are log-uniform on this range.
    pub coef_range: (f64, f64),
    pub noise: NoiseSpec,
    pub indicator: IndicatorMeta,
}

impl Default for ScmGenConfig {
    fn default() -> Self {
        ScmGenConfig {
            node_count: 5,
            max_parents: 3,
            link_budget: 5,
            changing_links: 1,
            n: 10_000,
            coef_range: (0.5, 1.0),
            noise: NoiseSpec::Normal { sigma: 1.0 },
            indicator: IndicatorMeta::default(),
        }
    }
}

/// Frozen random model: everything but the noise draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmSpec {
    /// Seed this model was generated from (0 for hand-built models).
    pub seed: u64,
    dag: Dag,
    /// Coefficient magnitudes in canonical edge order (child-major).
    coefficients: Vec<f64>,
    /// Signs aligned with coefficients, each +1 or -1.
    signs: Vec<i8>,
    /// Per-node noise, Mixed already resolved for generated specs.
    noise: Vec<NoiseSpec>,
    changing: Vec<ChangingEdge>,
}

impl ScmSpec {
    pub fn from_parts(
        seed: u64,
        dag: Dag,
        signed_coefficients: &[f64],
        noise: Vec<NoiseSpec>,
        changing: Vec<ChangingEdge>,
    ) -> Result<Self, CoreError> {
        if signed_coefficients.len() != dag.edge_count() {
            return Err(CoreError::invalid("one coefficient per edge required"));
        }
        if noise.len() != dag.node_count() {
            return Err(CoreError::invalid("one noise spec per node required"));
        }
        for ns in &noise {
            ns.validate()?;
        }
        let mut coefficients = Vec::with_capacity(signed_coefficients.len());
        let mut signs = Vec::with_capacity(signed_coefficients.len());
        for &c in signed_coefficients {
            if !c.is_finite() || c == 0.0 {
                return Err(CoreError::invalid("coefficients must be finite and nonzero"));
            }
            coefficients.push(c.abs());
            signs.push(if c < 0.0 { -1 } else { 1 });
        }
        let mut seen = BTreeSet::new();
        for ce in &changing {
            if !dag.has_edge(ce.parent, ce.child) {
                return Err(CoreError::invalid("changing edge not in dag"));
            }
            if !seen.insert((ce.parent, ce.child)) {
                return Err(CoreError::invalid("duplicate changing edge"));
            }
            if ce.indicator.len() != changing[0].indicator.len() {
                return Err(CoreError::invalid("indicator lengths differ"));
            }
        }
        Ok(ScmSpec {
            seed,
            dag,
            coefficients,
            signs,
            noise,
            changing,
        })
    }

    /// Draws a full random spec. Stream order: DAG, changing-edge choice,
    /// per-edge fraction and indicator sub-seed, coefficients, noise kinds.
    pub fn generate(cfg: &ScmGenConfig, seed: u64) -> Result<Self, CoreError> {
        cfg.indicator.validate()?;
        cfg.noise.validate()?;
        if !(cfg.coef_range.0 > 0.0 && cfg.coef_range.1 >= cfg.coef_range.0) {
            return Err(CoreError::invalid("coefficient range must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = generate_dag_with(&mut rng, cfg.node_count, cfg.max_parents, cfg.link_budget)?;
        let edges = dag.edge_list();
        if cfg.changing_links > edges.len() {
            return Err(CoreError::invalid("more changing links than edges"));
        }
        let mut chosen: Vec<usize> =
            rand::seq::index::sample(&mut rng, edges.len(), cfg.changing_links).into_vec();
        chosen.sort_unstable();
        let (a_lo, a_hi) = cfg.indicator.regime_fraction_range;
        let mut changing = Vec::with_capacity(chosen.len());
        for idx in chosen {
            let (child, parent) = edges[idx];
            let a = a_lo + rng.gen::<f64>() * (a_hi - a_lo);
            let sub_seed = rng.gen::<u64>();
            let indicator = sample_indicator(cfg.n, &cfg.indicator, a, sub_seed)?;
            changing.push(ChangingEdge {
                parent,
                child,
                indicator,
            });
        }
        let ln_lo = libm::log(cfg.coef_range.0);
        let ln_hi = libm::log(cfg.coef_range.1);
        let mut coefficients = Vec::with_capacity(edges.len());
        let mut signs = Vec::with_capacity(edges.len());
        for _ in 0..edges.len() {
            coefficients.push(libm::exp(ln_lo + rng.gen::<f64>() * (ln_hi - ln_lo)));
            signs.push(if rng.gen::<bool>() { 1 } else { -1 });
        }
        let noise = (0..cfg.node_count)
            .map(|_| match cfg.noise {
                NoiseSpec::Mixed => MIXED_POOL[rng.gen_range(0..MIXED_POOL.len())],
                other => other,
            })
            .collect();
        Ok(ScmSpec {
            seed,
            dag,
            coefficients,
            signs,
            noise,
            changing,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn noise(&self) -> &[NoiseSpec] {
        &self.noise
    }

    pub fn changing(&self) -> &[ChangingEdge] {
        &self.changing
    }

    pub fn kappa(&self) -> usize {
        self.changing.len()
    }

    /// Signed coefficient per canonical edge (child-major order).
    pub fn signed_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.signs)
            .map(|(c, s)| c * *s as f64)
            .collect()
    }

    /// Unordered changing pairs, canonically (min, max).
    pub fn changing_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.changing
            .iter()
            .map(|ce| {
                let (a, b) = (ce.parent, ce.child);
                if a < b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    }

    /// DAG of one state; bit k of `bits` keeps changing edge k.
    pub fn state_dag(&self, bits: usize) -> Dag {
        let off: Vec<(usize, usize)> = self
            .changing
            .iter()
            .enumerate()
            .filter(|(k, _)| bits & (1 << k) == 0)
            .map(|(_, ce)| (ce.parent, ce.child))
            .collect();
        self.dag.without_edges(&off)
    }

    /// Simulates n samples. Noise streams are separated per node through
    /// sub-seeds drawn up front in node order.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Dataset, CoreError> {
        for ce in &self.changing {
            if ce.indicator.len() != n {
                return Err(CoreError::invalid("indicator length differs from n"));
            }
        }
        let k = self.dag.node_count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sub_seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            cols.push(sample_noise(&self.noise[i], n, sub_seeds[i])?);
        }
        let mut coef = BTreeMap::new();
        for ((child, parent), c) in self.dag.edge_list().iter().zip(self.signed_coefficients()) {
            coef.insert((*parent, *child), c);
        }
        let indicators: BTreeMap<(usize, usize), &Indicator> = self
            .changing
            .iter()
            .map(|ce| ((ce.parent, ce.child), &ce.indicator))
            .collect();
        for i in self.dag.topo_order()? {
            for &p in self.dag.parents(i) {
                let c = coef[&(p, i)];
                // split borrow: parents are never the node itself
                let (src, dst) = if p < i {
                    let (a, b) = cols.split_at_mut(i);
                    (&a[p], &mut b[0])
                } else {
                    let (a, b) = cols.split_at_mut(p);
                    (&b[0], &mut a[i])
                };
                match indicators.get(&(p, i)) {
                    Some(ind) => {
                        for (t, v) in dst.iter_mut().enumerate() {
                            if ind.values()[t] {
                                *v += c * src[t];
                            }
                        }
                    }
                    None => {
                        for (t, v) in dst.iter_mut().enumerate() {
                            *v += c * src[t];
                        }
                    }
                }
            }
        }
        Dataset::from_cols(cols)
    }
}
