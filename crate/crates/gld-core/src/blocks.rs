// SPDX-License-Identifier: MIT
//! Per-block partial-correlation scores.
//!
//! A series is cut into contiguous blocks of length `b`; the trailing
//! remainder is dropped. Each block yields one Fisher z of the partial
//! correlation of x and y given z, computed entirely within the block.

use alloc::vec::Vec;

use crate::num::fisher_z;
use crate::CoreError;

/// Per-block scores for one query at one block length.
#[derive(Clone, Debug)]
pub struct ScoreSeries {
    /// One Fisher z per block, block order.
    pub scores: Vec<f64>,
    /// Block length.
    pub b: usize,
    /// Conditioning-set size of the query (not the post-pivot rank).
    pub z_dim: usize,
    /// Per-block score sd under independence: (b - 3 - z_dim)^{-1/2}.
    pub sigma_b: f64,
    /// Blocks where a correlation was undefined and scored as 0.
    pub degenerate: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Centered copy of one block. Columns whose deviations are at rounding
/// level relative to their mean are constant in substance; zero them so
/// they read as degenerate instead of amplifying noise.
fn centered(col: &[f64], lo: usize, hi: usize) -> Vec<f64> {
    let slice = &col[lo..hi];
    let mean = slice.iter().sum::<f64>() / slice.len() as f64;
    let mut out: Vec<f64> = slice.iter().map(|v| v - mean).collect();
    let max_dev = out.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_dev <= 1e-12 * mean.abs() {
        for v in &mut out {
            *v = 0.0;
        }
    }
    out
}

/// Orthonormal basis of the span of the centered z columns, by modified
/// Gram-Schmidt with column pivoting. A column is dropped once its
/// remaining norm falls below 1e-12 of its original norm.
fn orthonormal_basis(zs: &[&[f64]], lo: usize, hi: usize) -> Vec<Vec<f64>> {
    let mut cand: Vec<(Vec<f64>, f64)> = zs
        .iter()
        .map(|z| {
            let c = centered(z, lo, hi);
            let orig = dot(&c, &c);
            (c, orig)
        })
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while !cand.is_empty() {
        let (best, norm2) = cand
            .iter()
            .enumerate()
            .map(|(i, (c, _))| (i, dot(c, c)))
            .fold((0, f64::MIN), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        let orig = cand[best].1;
        if norm2 <= 1e-24 * orig || norm2 <= 0.0 {
            break; // numerically inside the current span
        }
        let (mut q, _) = cand.swap_remove(best);
        let inv = 1.0 / libm::sqrt(norm2);
        for v in &mut q {
            *v *= inv;
        }
        for (c, _) in &mut cand {
            let proj = dot(&q, c);
            for (ci, qi) in c.iter_mut().zip(&q) {
                *ci -= proj * qi;
            }
        }
        basis.push(q);
    }
    basis
}

/// Two projection passes; the second sweeps out the rounding residue the
/// first leaves behind.
fn residualize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let proj = dot(q, v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
    }
}

/// Fisher z of the partial correlation of x and y given zs over rows
/// [lo, hi). The flag marks a degenerate block (undefined correlation,
/// reported as score 0).
pub fn block_score(x: &[f64], y: &[f64], zs: &[&[f64]], lo: usize, hi: usize) -> (f64, bool) {
    let basis = orthonormal_basis(zs, lo, hi);
    let mut xr = centered(x, lo, hi);
    let mut yr = centered(y, lo, hi);
    residualize(&mut xr, &basis);
    residualize(&mut yr, &basis);
    let denom2 = dot(&xr, &xr) * dot(&yr, &yr);
    if denom2 <= 0.0 {
        return (0.0, true);
    }
    let r = dot(&xr, &yr) / libm::sqrt(denom2);
    if !r.is_finite() {
        return (0.0, true);
    }
    (fisher_z(r), false)
}

/// Fisher z over an arbitrary row subset; the bootstrap's pseudo-block.
pub fn subset_score(x: &[f64], y: &[f64], zs: &[&[f64]], idx: &[usize]) -> (f64, bool) {
    let gx: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let gy: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let gz: Vec<Vec<f64>> = zs
        .iter()
        .map(|z| idx.iter().map(|&i| z[i]).collect())
        .collect();
    let refs: Vec<&[f64]> = gz.iter().map(|v| v.as_slice()).collect();
    block_score(&gx, &gy, &refs, 0, idx.len())
}

/// Scores for every full block of length b. Errors when b leaves fewer
/// than one degree of freedom or no full block fits.
pub fn score_series(
    x: &[f64],
    y: &[f64],
    zs: &[&[f64]],
    b: usize,
) -> Result<ScoreSeries, CoreError> {
    let z_dim = zs.len();
    if b < z_dim + 4 {
        return Err(CoreError::DofExhausted { b, z_dim });
    }
    let n = x.len();
    let theta = n / b;
    if theta == 0 {
        return Err(CoreError::NoBlocks);
    }
    let mut scores = Vec::with_capacity(theta);
    let mut degenerate = 0usize;
    for t in 0..theta {
        let (s, degen) = block_score(x, y, zs, t * b, (t + 1) * b);
        if degen {
            degenerate += 1;
        }
        scores.push(s);
    }
    Ok(ScoreSeries {
        scores,
        b,
        z_dim,
        sigma_b: 1.0 / libm::sqrt((b - 3 - z_dim) as f64),
        degenerate,
    })
}

/// Whole-series Fisher z with its sd (n - 3 - |z|)^{-1/2}.
pub fn full_data_z(x: &[f64], y: &[f64], zs: &[&[f64]]) -> Result<(f64, f64), CoreError> {
    let n = x.len();
    let z_dim = zs.len();
    if n < z_dim + 4 {
        return Err(CoreError::DofExhausted { b: n, z_dim });
    }
    let (z, _) = block_score(x, y, zs, 0, n);
    Ok((z, 1.0 / libm::sqrt((n - 3 - z_dim) as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    const ATANH_HALF: f64 = 0.549_306_144_334_054_9;

    /// x, e, v: pairwise orthogonal mean-zero patterns of length 8.
    fn patterns() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let x = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let e = vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let v = vec![1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0];
        (x, e, v)
    }

    #[test]
    fn exact_half_correlation() {
        let (x, e, _) = patterns();
        let root3_half = libm::sqrt(3.0) / 2.0;
        let y: Vec<f64> = x
            .iter()
            .zip(&e)
            .map(|(a, b)| 0.5 * a + root3_half * b)
            .collect();
        let (z, degen) = block_score(&x, &y, &[], 0, 8);
        assert!(!degen);
        assert_abs_diff_eq!(z, ATANH_HALF, epsilon = 1e-12);
    }

    #[test]
    fn common_cause_vanishes_given_z() {
        // x = z + u, y = z + v with u, v, z pairwise orthogonal.
        let (u, z, v) = patterns();
        let xs: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + b).collect();
        let ys: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a + b).collect();
        let (marginal, _) = block_score(&xs, &ys, &[], 0, 8);
        assert_abs_diff_eq!(marginal, ATANH_HALF, epsilon = 1e-12);
        let (partial, degen) = block_score(&xs, &ys, &[&z], 0, 8);
        assert!(!degen);
        assert_abs_diff_eq!(partial, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn collinear_z_columns_collapse() {
        let (u, z, v) = patterns();
        let xs: Vec<f64> = z.iter().zip(&u).map(|(a, b)| a + b).collect();
        let ys: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a + b).collect();
        let z2: Vec<f64> = z.iter().map(|a| -3.0 * a).collect();
        let (one, _) = block_score(&xs, &ys, &[&z], 0, 8);
        let (two, _) = block_score(&xs, &ys, &[&z, &z2], 0, 8);
        assert_abs_diff_eq!(one, two, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_blocks() {
        let flat = vec![2.5; 8];
        let (x, _, _) = patterns();
        assert_eq!(block_score(&flat, &x, &[], 0, 8), (0.0, true));
        // constant at large magnitude is still constant
        let big = vec![1e9; 8];
        assert_eq!(block_score(&big, &x, &[], 0, 8), (0.0, true));
    }

    #[test]
    fn series_shape_and_sigma() {
        let x: Vec<f64> = (0..25).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..25).map(|i| (i as f64 * 1.3).cos()).collect();
        let s = score_series(&x, &y, &[], 8).unwrap();
        assert_eq!(s.scores.len(), 3); // remainder row dropped
        assert_eq!(s.b, 8);
        assert_abs_diff_eq!(s.sigma_b, 1.0 / libm::sqrt(5.0), epsilon = 1e-15);
        assert_eq!(
            score_series(&x, &y, &[], 3).unwrap_err(),
            CoreError::DofExhausted { b: 3, z_dim: 0 }
        );
    }

    #[test]
    fn series_dof_guard_counts_query_z() {
        let x = vec![0.0; 24];
        let y = vec![0.0; 24];
        let z = vec![0.0; 24];
        let zs: Vec<&[f64]> = vec![&z, &z, &z];
        assert_eq!(
            score_series(&x, &y, &zs, 6).unwrap_err(),
            CoreError::DofExhausted { b: 6, z_dim: 3 }
        );
        assert!(score_series(&x, &y, &zs, 7).is_ok());
    }

    #[test]
    fn full_data_z_matches_single_block() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.4).sin()).collect();
        let (z, sigma) = full_data_z(&x, &y, &[]).unwrap();
        let (blk, _) = block_score(&x, &y, &[], 0, 40);
        assert_eq!(z, blk);
        assert_abs_diff_eq!(sigma, 1.0 / libm::sqrt(37.0), epsilon = 1e-15);
    }

    /// Recursive partial-correlation identity as an independent oracle.
    fn plain_r(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for (a, b) in x.iter().zip(y) {
            sxy += (a - mx) * (b - my);
            sxx += (a - mx) * (a - mx);
            syy += (b - my) * (b - my);
        }
        sxy / libm::sqrt(sxx * syy)
    }

    #[test]
    fn matches_recursive_partial_formula() {
        // deterministic pseudo-data, no dependence structure needed
        let n = 64usize;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.619).sin()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.317).cos() + 0.4 * (i as f64 * 0.619).sin())
            .collect();
        let z: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.111).sin() + 0.2 * (i as f64 * 0.317).cos())
            .collect();
        let rxy = plain_r(&x, &y);
        let rxz = plain_r(&x, &z);
        let ryz = plain_r(&y, &z);
        let expect = (rxy - rxz * ryz) / libm::sqrt((1.0 - rxz * rxz) * (1.0 - ryz * ryz));
        let (got, degen) = block_score(&x, &y, &[&z], 0, n);
        assert!(!degen);
        assert_abs_diff_eq!(got, fisher_z(expect), epsilon = 1e-10);
    }
}
