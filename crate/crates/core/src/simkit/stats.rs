//! Order statistics for AASR samples.

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PercentileMethod {
    /// Sorted sample at 1-based index `⌈q·n⌉` (at least 1).
    #[default]
    NearestRank,
    /// Linear interpolation between closest ranks on `(n − 1)·q`.
    Linear,
}

/// Box-plot summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub p5: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl Summary {
    pub fn as_array(&self) -> [f64; 5] {
        [self.min, self.p5, self.median, self.p95, self.max]
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(IsacError::EmptySample);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Quantile `q ∈ [0, 1]` of an ascending sample.
pub fn quantile_sorted(sorted: &[f64], q: f64, method: PercentileMethod) -> f64 {
    let n = sorted.len();
    let q = q.clamp(0.0, 1.0);
    match method {
        PercentileMethod::NearestRank => {
            let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
            sorted[rank.min(n) - 1]
        }
        PercentileMethod::Linear => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}

pub fn quantile(samples: &[f64], q: f64, method: PercentileMethod) -> Result<f64> {
    Ok(quantile_sorted(&sorted(samples)?, q, method))
}

pub fn percentiles(samples: &[f64]) -> Result<Summary> {
    percentiles_with(samples, PercentileMethod::NearestRank)
}

pub fn percentiles_with(samples: &[f64], method: PercentileMethod) -> Result<Summary> {
    let v = sorted(samples)?;
    Ok(Summary {
        min: v[0],
        p5: quantile_sorted(&v, 0.05, method),
        median: quantile_sorted(&v, 0.5, method),
        p95: quantile_sorted(&v, 0.95, method),
        max: v[v.len() - 1],
    })
}

/// Interquartile range `q75 − q25`.
pub fn iqr(samples: &[f64], method: PercentileMethod) -> Result<f64> {
    let v = sorted(samples)?;
    Ok(quantile_sorted(&v, 0.75, method) - quantile_sorted(&v, 0.25, method))
}
