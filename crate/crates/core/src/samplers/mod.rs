//! MCMC for the five latent-field models.
//!
//! One iteration updates, in order: the DAG (MDGM models only), the latent
//! field by a systematic Gibbs sweep, the spatial parameter `beta`, and the
//! noise rates.

mod cftp;
mod chain;
mod kernels;
mod truncated_beta;

pub use cftp::{cftp_ising, cftp_ising_with_stats, CftpDraw, DEFAULT_CFTP_SITE_CAP};
pub use chain::{
    initial_state, run_chain, run_chain_with_rng, AcceptanceStats, PosteriorSamples, SampleRecord,
};
pub use kernels::{
    direct_update_st, exchange_log_ratio, exchange_update_beta_mrf, gibbs_update_eta,
    gibbs_update_z, mh_update_beta, mh_update_dag, propose_dag,
};
pub use truncated_beta::sample_truncated_beta;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dag::{Dag, DagClass};
use crate::error::{Error, Result};
use crate::model::{LatentField, NoiseParams, PriorSpec, SpatialParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "mdgm-st")]
    MdgmSt,
    #[serde(rename = "mdgm-rooted")]
    MdgmRooted,
    #[serde(rename = "mdgm-ao")]
    MdgmAo,
    #[serde(rename = "amrf")]
    Amrf,
    #[serde(rename = "exact-mrf")]
    ExactMrf,
}

impl Model {
    pub const ALL: [Model; 5] =
        [Model::MdgmSt, Model::MdgmRooted, Model::MdgmAo, Model::Amrf, Model::ExactMrf];

    /// The DAG class of an MDGM model, `None` for the MRF models.
    pub fn dag_class(self) -> Option<DagClass> {
        match self {
            Model::MdgmSt => Some(DagClass::SpanningTree),
            Model::MdgmRooted => Some(DagClass::Rooted),
            Model::MdgmAo => Some(DagClass::AcyclicOrientation),
            Model::Amrf | Model::ExactMrf => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::MdgmSt => "mdgm-st",
            Model::MdgmRooted => "mdgm-rooted",
            Model::MdgmAo => "mdgm-ao",
            Model::Amrf => "amrf",
            Model::ExactMrf => "exact-mrf",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown model '{s}' (expected one of mdgm-st, mdgm-rooted, mdgm-ao, amrf, exact-mrf)"
                ))
            })
    }
}

/// Starting values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Init {
    /// `eta = (0.25, 0.75)`, `beta = beta_max / 2`, and `z_i = 1` when the
    /// unit's mean rating exceeds the grand mean (0 for unrated units).
    DataDriven,
    /// Given `beta` and `eta`; `z` is the given bit-string, or i.i.d. fair
    /// coins when absent.
    Fixed {
        beta: f64,
        eta0: f64,
        eta1: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub model: Model,
    pub beta_proposal_sd: f64,
    pub priors: PriorSpec,
    pub init: Init,
    pub cftp_step_cap: u64,
    /// When false, `beta` stays at its initial value.
    pub update_beta: bool,
    /// When false, the noise rates stay at their initial values.
    pub update_eta: bool,
}

impl McmcConfig {
    pub fn new(model: Model, total_iterations: usize, burn_in: usize, seed: u64) -> Self {
        McmcConfig {
            total_iterations,
            burn_in,
            seed,
            model,
            beta_proposal_sd: 0.05,
            priors: PriorSpec::default(),
            init: Init::DataDriven,
            cftp_step_cap: DEFAULT_CFTP_SITE_CAP,
            update_beta: true,
            update_eta: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iterations {
            return Err(Error::InvalidParameter(format!(
                "burn-in ({}) must be less than the total iterations ({})",
                self.burn_in, self.total_iterations
            )));
        }
        if !(self.beta_proposal_sd > 0.0 && self.beta_proposal_sd.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta proposal sd must be positive, got {}",
                self.beta_proposal_sd
            )));
        }
        self.priors.validate()?;
        if let Init::Fixed { beta, eta0, eta1, .. } = &self.init {
            SpatialParam::new(*beta)?;
            NoiseParams::new(*eta0, *eta1)?;
            if *beta > self.priors.beta_max {
                return Err(Error::InvalidParameter(format!(
                    "initial beta {beta} outside prior support [0, {}]",
                    self.priors.beta_max
                )));
            }
        }
        Ok(())
    }
}

/// The current state of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub z: LatentField,
    pub dag: Option<Dag>,
    pub beta: SpatialParam,
    pub eta: NoiseParams,
    pub iteration: usize,
}
