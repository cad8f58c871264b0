//! Multi-seed curve aggregation.

use crate::error::{BenchError, Result};

/// Pointwise mean with a band of half a population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedCurve {
    pub steps: Vec<u64>,
    pub per_seed: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl SeedCurve {
    pub fn lower(&self) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.half_width)
            .map(|(m, h)| m - h)
            .collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.half_width)
            .map(|(m, h)| m + h)
            .collect()
    }
}

/// Band scale applied to the population standard deviation.
pub const BAND_SCALE: f64 = 0.5;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation with divisor `n`.
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Aggregates per-seed `(step, value)` series sharing one step grid.
pub fn aggregate_seeds(runs: &[Vec<(u64, f64)>]) -> Result<SeedCurve> {
    let first = runs
        .first()
        .ok_or_else(|| BenchError::GridMismatch("no series".into()))?;
    let steps: Vec<u64> = first.iter().map(|p| p.0).collect();
    for (i, run) in runs.iter().enumerate().skip(1) {
        if run.len() != steps.len() || run.iter().zip(&steps).any(|(p, s)| p.0 != *s) {
            return Err(BenchError::GridMismatch(format!(
                "series {i} does not share the step grid of series 0"
            )));
        }
    }
    let per_seed: Vec<Vec<f64>> = runs.iter().map(|r| r.iter().map(|p| p.1).collect()).collect();
    let mut mean_out = Vec::with_capacity(steps.len());
    let mut half = Vec::with_capacity(steps.len());
    let mut column = Vec::with_capacity(runs.len());
    for j in 0..steps.len() {
        column.clear();
        column.extend(per_seed.iter().map(|s| s[j]));
        mean_out.push(mean(&column));
        half.push(BAND_SCALE * population_std(&column));
    }
    Ok(SeedCurve {
        steps,
        per_seed,
        mean: mean_out,
        half_width: half,
    })
}
