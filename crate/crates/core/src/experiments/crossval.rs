//! Hold-out cross-validation of rating probabilities.

use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Nug;
use crate::model::Observations;
use crate::rng::stream;
use crate::samplers::{run_chain_with_rng, McmcConfig, Model, PosteriorSamples};

pub const CV_CSV_HEADER: &str = "iteration,model,mae";

const TAG_HOLDOUT: u64 = 1;
const TAG_CHAIN: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub iteration: usize,
    pub model: Model,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub rows: Vec<CvRow>,
}

impl CvResult {
    /// MAE averaged over iterations, per model in first-seen order.
    pub fn mean_mae(&self) -> Vec<(Model, f64)> {
        let mut models: Vec<Model> = Vec::new();
        for r in &self.rows {
            if !models.contains(&r.model) {
                models.push(r.model);
            }
        }
        models
            .into_iter()
            .map(|m| {
                let v: Vec<f64> = self.rows.iter().filter(|r| r.model == m).map(|r| r.mae).collect();
                (m, v.iter().sum::<f64>() / v.len() as f64)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CV_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.iteration, r.model, r.mae)?;
        }
        Ok(())
    }
}

/// Mean absolute error between predicted and observed rating rates over
/// the held-out units. The prediction is the posterior mean of
/// `eta[z_i]`.
pub fn holdout_mae(samples: &PosteriorSamples, y: &Observations, held_out: &[usize]) -> Result<f64> {
    if held_out.is_empty() {
        return Err(Error::InvalidParameter("no held-out units".into()));
    }
    let predicted = samples.posterior_predictive_rate();
    let mut total = 0.0;
    for &i in held_out {
        let observed = y
            .unit_mean(i)
            .ok_or_else(|| Error::InvalidParameter(format!("held-out unit {i} has no ratings")))?;
        total += (predicted[i] - observed).abs();
    }
    Ok(total / held_out.len() as f64)
}

/// For each iteration, withholds every rating of `holdout_count` rated
/// units drawn at random, fits each model to the rest, and scores the
/// held-out units. All models see the same hold-out set in an iteration.
pub fn cross_validate(
    y: &Observations,
    nug: &Nug,
    holdout_count: usize,
    iterations: usize,
    mcmc: &McmcConfig,
    models: &[Model],
    seed: u64,
) -> Result<CvResult> {
    if y.n() != nug.n() {
        return Err(Error::DimensionMismatch { expected: nug.n(), got: y.n() });
    }
    let rated = y.rated_units();
    if holdout_count == 0 || holdout_count > rated.len() {
        return Err(Error::InvalidParameter(format!(
            "hold-out count {holdout_count} must be between 1 and the {} rated units",
            rated.len()
        )));
    }
    mcmc.validate()?;
    let holdouts: Vec<Vec<usize>> = (0..iterations)
        .map(|it| {
            let mut rng = stream(seed, &[it as u64, TAG_HOLDOUT]);
            let mut units: Vec<usize> =
                sample(&mut rng, rated.len(), holdout_count).into_iter().map(|k| rated[k]).collect();
            units.sort_unstable();
            units
        })
        .collect();
    let jobs: Vec<(usize, usize)> =
        (0..iterations).flat_map(|it| (0..models.len()).map(move |k| (it, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(it, k)| {
            let train = y.without_units(&holdouts[it]);
            let mut config = mcmc.clone();
            config.model = models[k];
            config.seed = seed;
            let mut rng = stream(seed, &[it as u64, TAG_CHAIN, k as u64]);
            let samples = run_chain_with_rng(&train, nug, &config, &mut rng)?;
            Ok(CvRow { iteration: it, model: models[k], mae: holdout_mae(&samples, y, &holdouts[it])? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvResult { rows })
}
