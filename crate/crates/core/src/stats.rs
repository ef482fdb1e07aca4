//! Order-stable summary statistics.
//!
//! Sums use fixed pairwise recursion, so a slice of per-path results
//! reduces to the same bits no matter how many workers produced it.

use alloc::vec::Vec;

use crate::math;

const PAIRWISE_BASE: usize = 32;

/// Pairwise (cascade) sum; deterministic for a given slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn pairwise_sum_by<F: Fn(f64) -> f64 + Copy>(xs: &[f64], f: F) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        let mut s = 0.0;
        for &x in xs {
            s += f(x);
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

/// Moments of one sample column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    /// Unbiased sample variance (zero when `n < 2`).
    pub variance: f64,
    /// `sqrt(variance / n)`.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

/// Two-pass mean/variance with pairwise sums.
pub fn summarize(xs: &[f64]) -> Moments {
    let n = xs.len();
    assert!(n > 0, "summarize needs a nonempty sample");
    let mean = pairwise_sum(xs) / n as f64;
    let variance = if n > 1 {
        pairwise_sum_by(xs, |x| {
            let d = x - mean;
            d * d
        }) / (n as f64 - 1.0)
    } else {
        0.0
    };
    let mut min = xs[0];
    let mut max = xs[0];
    for &x in xs {
        if x < min {
            min = x;
        }
        if x > max {
            max = x;
        }
    }
    Moments {
        n: n as u64,
        mean,
        variance,
        stderr: math::sqrt(variance / n as f64),
        min,
        max,
    }
}

/// Unbiased sample covariance of two equal-length columns.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() > 1);
    let mx = pairwise_sum(xs) / xs.len() as f64;
    let my = pairwise_sum(ys) / ys.len() as f64;
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys.iter())
        .map(|(&x, &y)| (x - mx) * (y - my))
        .collect();
    pairwise_sum(&prods) / (xs.len() as f64 - 1.0)
}

/// z-score between two independent estimates; `None` stderrs collapse to an
/// exact-match verdict.
pub fn z_score(mean_a: f64, se_a: f64, mean_b: f64, se_b: f64) -> f64 {
    let denom = math::sqrt(se_a * se_a + se_b * se_b);
    if denom == 0.0 {
        if mean_a == mean_b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (mean_a - mean_b) / denom
    }
}
