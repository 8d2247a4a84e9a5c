// SPDX-License-Identifier: MIT
//! Scalar numerics shared by every statistical test.
//! All transcendental math routes through `libm` so std and no_std builds
//! produce bit-identical results.

use alloc::vec::Vec;

/// 1/sqrt(2*pi)
const FRAC_1_SQRT_2PI: f64 = 0.39894228040143267794;
const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Correlations are clipped to this magnitude before atanh.
pub const R_CLIP: f64 = 1.0 - 1e-12;

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Standard normal CDF via erfc; keeps relative precision in the lower tail.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// P(X > x) for standard normal X; avoids 1 - cdf cancellation.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse standard normal CDF on (0, 1).
/// Acklam's rational approximation polished by two Halley steps; few-ulp
/// accuracy over the whole domain used here.
pub fn norm_inv_cdf(p: f64) -> f64 {
    if p.is_nan() {
        return f64::NAN;
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p > 1.0 - P_LOW {
        let q = libm::sqrt(-2.0 * libm::log1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley refinement against the erfc-based CDF.
    for _ in 0..2 {
        let e = norm_cdf(x) - p;
        let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Fisher z of a correlation, clipped so exact collinearity stays finite.
pub fn fisher_z(r: f64) -> f64 {
    if r.is_nan() {
        return 0.0;
    }
    libm::atanh(r.max(-R_CLIP).min(R_CLIP))
}

/// P(K <= k) for K ~ Binomial(n, p); sums the smaller tail directly.
pub fn binom_cdf(n: u64, p: f64, k: u64) -> f64 {
    if k >= n {
        return 1.0;
    }
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0; // k < n
    }
    if (k as f64) < n as f64 * p {
        tail_sum(n, p, 0, k)
    } else {
        1.0 - tail_sum(n, p, k + 1, n)
    }
}

/// P(K > k) for K ~ Binomial(n, p); the upper tail is summed directly so
/// small p-values keep relative precision.
pub fn binom_sf(n: u64, p: f64, k: u64) -> f64 {
    if k >= n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0; // k < n
    }
    if (k as f64) < n as f64 * p {
        1.0 - tail_sum(n, p, 0, k)
    } else {
        tail_sum(n, p, k + 1, n)
    }
}

/// Sum of binomial pmf over lo..=hi, summed from the far end toward the mode
/// so terms accumulate in increasing magnitude.
fn tail_sum(n: u64, p: f64, lo: u64, hi: u64) -> f64 {
    debug_assert!(lo <= hi && hi <= n);
    let mode = n as f64 * p;
    let pascal = if n <= 128 { Some(pascal_row(n)) } else { None };
    let pmf = |t: u64| -> f64 {
        match &pascal {
            // exact integer coefficient; error limited to the two pow calls
            Some(row) => {
                row[t as usize] as f64 * libm::pow(p, t as f64) * libm::pow(1.0 - p, (n - t) as f64)
            }
            None => libm::exp(
                libm::lgamma(n as f64 + 1.0) - libm::lgamma(t as f64 + 1.0)
                    - libm::lgamma((n - t) as f64 + 1.0)
                    + t as f64 * libm::log(p)
                    + (n - t) as f64 * libm::log1p(-p),
            ),
        }
    };
    let mut s = 0.0;
    if (hi as f64) < mode {
        for t in lo..=hi {
            s += pmf(t);
        }
    } else {
        for t in (lo..=hi).rev() {
            s += pmf(t);
        }
    }
    s
}

/// Row n of Pascal's triangle; exact in u128 up to n = 128.
fn pascal_row(n: u64) -> Vec<u128> {
    let mut row = alloc::vec![1u128];
    for _ in 0..n {
        let mut next = alloc::vec![1u128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    libm::sqrt(ss / (xs.len() - 1) as f64)
}
