//! Parallel ensemble engine with deterministic seeding and order-stable
//! aggregation.
//!
//! Per-path results are written into index-addressed slots (rayon's ordered
//! collect), then reduced with fixed pairwise summation, so the report is
//! bitwise identical for any worker count.

use hamswitch_core::stats::{self, Moments};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Summary of one ensemble estimate. Wall time is informational and is
/// excluded from the determinism comparison.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub min: f64,
    pub max: f64,
    pub seed: u64,
    pub wall_secs: f64,
}

impl EstimateReport {
    fn from_moments(m: Moments, seed: u64, wall_secs: f64) -> Self {
        EstimateReport {
            mean: m.mean,
            stderr: m.stderr,
            n: m.n,
            min: m.min,
            max: m.max,
            seed,
            wall_secs,
        }
    }

    /// Bitwise equality of everything except wall time.
    pub fn same_estimates(&self, other: &EstimateReport) -> bool {
        self.mean.to_bits() == other.mean.to_bits()
            && self.stderr.to_bits() == other.stderr.to_bits()
            && self.n == other.n
            && self.min.to_bits() == other.min.to_bits()
            && self.max.to_bits() == other.max.to_bits()
            && self.seed == other.seed
    }
}

/// Run a scalar-valued task over path indices `0..n`.
pub fn run_ensemble<F>(n: u64, seed: u64, task: F) -> EstimateReport
where
    F: Fn(u64) -> f64 + Sync,
{
    assert!(n >= 1, "ensemble needs at least one path");
    let start = Instant::now();
    let values: Vec<f64> = (0..n).into_par_iter().map(&task).collect();
    let m = stats::summarize(&values);
    EstimateReport::from_moments(m, seed, start.elapsed().as_secs_f64())
}

/// Raw per-path output columns from a vector-valued task.
pub struct EnsembleColumns {
    pub columns: Vec<Vec<f64>>,
    pub seed: u64,
    pub wall_secs: f64,
}

impl EnsembleColumns {
    pub fn summarize(&self, column: usize) -> Moments {
        stats::summarize(&self.columns[column])
    }

    pub fn report(&self, column: usize) -> EstimateReport {
        EstimateReport::from_moments(self.summarize(column), self.seed, self.wall_secs)
    }

    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        stats::covariance(&self.columns[a], &self.columns[b])
    }
}

/// Run a task writing `width` outputs per path; results come back as
/// columns in path-index order.
pub fn run_ensemble_columns<F>(n: u64, seed: u64, width: usize, task: F) -> EnsembleColumns
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    assert!(n >= 1 && width >= 1);
    let start = Instant::now();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; width];
            task(i, &mut row);
            row
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(n as usize); width];
    for row in &rows {
        for (c, &v) in row.iter().enumerate() {
            columns[c].push(v);
        }
    }
    EnsembleColumns {
        columns,
        seed,
        wall_secs: start.elapsed().as_secs_f64(),
    }
}

/// 3-sigma comparison of two independent estimates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Comparison {
    pub z: f64,
    pub pass: bool,
}

pub fn compare_estimates(a: &EstimateReport, b: &EstimateReport) -> Comparison {
    let z = stats::z_score(a.mean, a.stderr, b.mean, b.stderr);
    Comparison {
        z,
        pass: z.abs() <= 3.0,
    }
}
