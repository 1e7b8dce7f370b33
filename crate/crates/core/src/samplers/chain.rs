use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernels::{
    direct_update_st, exchange_update_beta_mrf, gibbs_update_eta, gibbs_update_z, mh_update_beta,
    mh_update_dag, propose_dag,
};
use super::{ChainState, Init, McmcConfig, Model};
use crate::dag::DagClass;
use crate::error::{Error, Result};
use crate::graph::Nug;
use crate::model::{suff_stat_raw, LatentField, NoiseParams, Observations, SpatialParam};
use crate::rng::{stream, ChainRng};

/// One retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub iter: usize,
    pub beta: f64,
    pub eta0: f64,
    pub eta1: f64,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(with = "bitstring")]
    pub z: LatentField,
    /// `[child, parent]` arcs of the current spanning tree (MDGM-ST only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree_edges: Option<Vec<[usize; 2]>>,
}

mod bitstring {
    use super::LatentField;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &LatentField, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&z.to_bitstring())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<LatentField, D::Error> {
        let s = String::deserialize(d)?;
        LatentField::from_bitstring(&s).map_err(serde::de::Error::custom)
    }
}

/// Move counters over the whole run, burn-in included.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub dag_proposed: usize,
    pub dag_accepted: usize,
    pub beta_proposed: usize,
    pub beta_accepted: usize,
    pub eta_stalls: usize,
}

impl AcceptanceStats {
    pub fn dag_rate(&self) -> Option<f64> {
        (self.dag_proposed > 0).then(|| self.dag_accepted as f64 / self.dag_proposed as f64)
    }

    pub fn beta_rate(&self) -> Option<f64> {
        (self.beta_proposed > 0).then(|| self.beta_accepted as f64 / self.beta_proposed as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub model: Model,
    pub records: Vec<SampleRecord>,
    pub acceptance: AcceptanceStats,
}

#[derive(Serialize)]
struct Summary<'a> {
    summary: &'a AcceptanceStats,
    model: Model,
    records: usize,
    dag_acceptance_rate: Option<f64>,
    beta_acceptance_rate: Option<f64>,
}

impl PosteriorSamples {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Per-unit posterior mean of `z_i`.
    pub fn posterior_mean_z(&self) -> Vec<f64> {
        let n = self.records.first().map_or(0, |r| r.z.len());
        let mut sums = vec![0.0; n];
        for r in &self.records {
            for (s, &v) in sums.iter_mut().zip(r.z.values()) {
                *s += f64::from(v);
            }
        }
        let k = self.records.len().max(1) as f64;
        sums.into_iter().map(|s| s / k).collect()
    }

    /// Posterior mean of the rating probability `eta[z_i]` at each unit.
    pub fn posterior_predictive_rate(&self) -> Vec<f64> {
        let n = self.records.first().map_or(0, |r| r.z.len());
        let mut sums = vec![0.0; n];
        for r in &self.records {
            for (s, &v) in sums.iter_mut().zip(r.z.values()) {
                *s += if v == 1 { r.eta1 } else { r.eta0 };
            }
        }
        let k = self.records.len().max(1) as f64;
        sums.into_iter().map(|s| s / k).collect()
    }

    /// Newline-delimited JSON records followed by an acceptance summary
    /// object.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        let summary = Summary {
            summary: &self.acceptance,
            model: self.model,
            records: self.records.len(),
            dag_acceptance_rate: self.acceptance.dag_rate(),
            beta_acceptance_rate: self.acceptance.beta_rate(),
        };
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Starting state for `config.init`. The DAG, when the model has one, is a
/// draw from its class prior.
pub fn initial_state<R: Rng + ?Sized>(
    y: &Observations,
    nug: &Nug,
    config: &McmcConfig,
    rng: &mut R,
) -> Result<ChainState> {
    let n = nug.n();
    let (z, beta, eta) = match &config.init {
        Init::DataDriven => {
            let total = y.total();
            let grand = if total > 0 {
                (0..n).map(|i| y.ones(i)).sum::<usize>() as f64 / total as f64
            } else {
                0.0
            };
            let z = LatentField::from_fn(n, |i| y.unit_mean(i).is_some_and(|m| m > grand) as u8);
            (z, config.priors.beta_max / 2.0, NoiseParams::new(0.25, 0.75)?)
        }
        Init::Fixed { beta, eta0, eta1, z } => {
            let z = match z {
                Some(bits) => LatentField::from_bitstring(bits)?,
                None => LatentField::from_fn(n, |_| rng.random_range(0..2)),
            };
            (z, *beta, NoiseParams::new(*eta0, *eta1)?)
        }
    };
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    let dag = match config.model.dag_class() {
        Some(class) => Some(propose_dag(nug, class, rng)?),
        None => None,
    };
    Ok(ChainState { z, dag, beta: SpatialParam::new(beta)?, eta, iteration: 0 })
}

/// Runs a chain on the stream derived from `config.seed`.
pub fn run_chain(y: &Observations, nug: &Nug, config: &McmcConfig) -> Result<PosteriorSamples> {
    let mut rng = stream(config.seed, &[]);
    run_chain_with_rng(y, nug, config, &mut rng)
}

/// Runs `config.total_iterations` iterations and keeps those after burn-in.
pub fn run_chain_with_rng(
    y: &Observations,
    nug: &Nug,
    config: &McmcConfig,
    rng: &mut ChainRng,
) -> Result<PosteriorSamples> {
    config.validate()?;
    nug.require_connected()?;
    if y.n() != nug.n() {
        return Err(Error::DimensionMismatch { expected: nug.n(), got: y.n() });
    }
    let model = config.model;
    let mut state = initial_state(y, nug, config, rng)?;
    let mut stats = AcceptanceStats::default();
    let mut records = Vec::with_capacity(config.total_iterations - config.burn_in);

    for iter in 0..config.total_iterations {
        match model.dag_class() {
            Some(DagClass::SpanningTree) => direct_update_st(&mut state, nug, rng)?,
            Some(class) => {
                stats.dag_proposed += 1;
                stats.dag_accepted += mh_update_dag(&mut state, nug, class, rng)? as usize;
            }
            None => {}
        }
        gibbs_update_z(&mut state, nug, model, y, rng)?;
        if config.update_beta {
            stats.beta_proposed += 1;
            let accepted = match model {
                Model::ExactMrf => exchange_update_beta_mrf(&mut state, nug, config, rng)?,
                _ => mh_update_beta(&mut state, nug, config, rng)?,
            };
            stats.beta_accepted += accepted as usize;
        }
        if config.update_eta {
            stats.eta_stalls += gibbs_update_eta(&mut state, y, &config.priors, rng)?;
        }
        state.iteration = iter + 1;

        if iter >= config.burn_in {
            let tree_edges = match (&state.dag, model) {
                (Some(dag), Model::MdgmSt) => Some(dag.arcs().map(|(p, c)| [c, p]).collect()),
                _ => None,
            };
            records.push(SampleRecord {
                iter,
                beta: state.beta.get(),
                eta0: state.eta.eta0(),
                eta1: state.eta.eta1(),
                t: suff_stat_raw(state.z.values(), nug),
                z: state.z.clone(),
                tree_edges,
            });
        }
    }
    Ok(PosteriorSamples { model, records, acceptance: stats })
}
