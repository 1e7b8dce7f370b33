//! Recovery metrics against a known field, and percentile bootstrap CIs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Nug;
use crate::model::{suff_stat_raw, LatentField};
use crate::samplers::{Model, PosteriorSamples};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const BOOTSTRAP_LEVEL: f64 = 0.90;

/// Metrics of one chain on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub model: Model,
    pub posterior_mean_accuracy: f64,
    pub posterior_rmse_t: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
}

fn check(samples: &PosteriorSamples, z_true: &LatentField) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no retained draws".into()));
    }
    let n = samples.records[0].z.len();
    if n != z_true.len() {
        return Err(Error::DimensionMismatch { expected: z_true.len(), got: n });
    }
    Ok(())
}

/// Mean over draws of the fraction of units matching the truth. Labels
/// are compared as-is.
pub fn posterior_mean_accuracy(samples: &PosteriorSamples, z_true: &LatentField) -> Result<f64> {
    check(samples, z_true)?;
    let n = z_true.len() as f64;
    let total: f64 = samples
        .records
        .iter()
        .map(|r| {
            let hits = r.z.values().iter().zip(z_true.values()).filter(|(a, b)| a == b).count();
            hits as f64 / n
        })
        .sum();
    Ok(total / samples.len() as f64)
}

/// Root mean square error of `T(z)` over draws, in edges.
pub fn posterior_rmse_t(samples: &PosteriorSamples, z_true: &LatentField, nug: &Nug) -> Result<f64> {
    check(samples, z_true)?;
    if nug.n() != z_true.len() {
        return Err(Error::DimensionMismatch { expected: nug.n(), got: z_true.len() });
    }
    let t_true = suff_stat_raw(z_true.values(), nug) as f64;
    let mse: f64 =
        samples.records.iter().map(|r| (r.t as f64 - t_true).powi(2)).sum::<f64>() / samples.len() as f64;
    Ok(mse.sqrt())
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let k = h.floor() as usize;
    let frac = h - k as f64;
    if k + 1 < sorted.len() {
        sorted[k] + frac * (sorted[k + 1] - sorted[k])
    } else {
        sorted[k]
    }
}

/// 90% percentile bootstrap interval for the mean: 1000 resamples of the
/// input's own size, bounded by the 5% and 95% quantiles of their means.
/// A single input gives the degenerate interval at that value.
pub fn bootstrap_ci<R: Rng + ?Sized>(stats: &[f64], rng: &mut R) -> Result<BootstrapCI> {
    if stats.is_empty() {
        return Err(Error::InvalidParameter("bootstrap needs at least one value".into()));
    }
    if let Some(bad) = stats.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite statistic {bad}")));
    }
    let r = stats.len();
    let point = stats.iter().sum::<f64>() / r as f64;
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..r).map(|_| stats[rng.random_range(0..r)]).sum::<f64>() / r as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - BOOTSTRAP_LEVEL) / 2.0;
    Ok(BootstrapCI {
        point,
        lo: quantile(&means, tail).min(point),
        hi: quantile(&means, 1.0 - tail).max(point),
        level: BOOTSTRAP_LEVEL,
        resamples: BOOTSTRAP_RESAMPLES,
    })
}
