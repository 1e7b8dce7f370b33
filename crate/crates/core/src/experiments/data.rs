//! Synthetic data: a perfect MRF draw observed through Bernoulli noise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LatticeSpec, Nug};
use crate::model::{LatentField, Observations};
use crate::samplers::{cftp_ising, McmcConfig, Model};

/// How many ratings each unit receives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObsScheme {
    FixedM(usize),
    Poisson(f64),
}

impl ObsScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ObsScheme::FixedM(0) => {
                Err(Error::InvalidParameter("fixed observation count must be at least 1".into()))
            }
            ObsScheme::Poisson(l) if !(l > 0.0 && l.is_finite()) => {
                Err(Error::InvalidParameter(format!("Poisson rate must be positive, got {l}")))
            }
            _ => Ok(()),
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match *self {
            ObsScheme::Poisson(l) => Some(l),
            ObsScheme::FixedM(_) => None,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match *self {
            ObsScheme::FixedM(m) => m,
            ObsScheme::Poisson(l) => Poisson::new(l).expect("validated rate").sample(rng) as usize,
        }
    }
}

/// `fixed:M` or `poisson:LAMBDA`.
impl FromStr for ObsScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("expected fixed:M or poisson:LAMBDA, got '{s}'"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let scheme = match kind {
            "fixed" => ObsScheme::FixedM(value.parse().map_err(|_| bad())?),
            "poisson" => ObsScheme::Poisson(value.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

impl fmt::Display for ObsScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsScheme::FixedM(m) => write!(f, "fixed:{m}"),
            ObsScheme::Poisson(l) => write!(f, "poisson:{l}"),
        }
    }
}

/// One cell of the simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lattice: LatticeSpec,
    pub beta_true: f64,
    /// Noise level: `eta0 = eta`, `eta1 = 1 - eta`.
    pub eta: f64,
    pub obs_scheme: ObsScheme,
    pub replications: usize,
    /// Template for every chain; `model` and `seed` are overwritten.
    pub mcmc: McmcConfig,
    pub models: Vec<Model>,
    /// Start chains at the true `beta` and `eta` with a random field.
    pub init_at_truth: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.eta) {
            return Err(Error::InvalidParameter(format!("eta must lie in [0, 0.5), got {}", self.eta)));
        }
        if !(self.beta_true >= 0.0 && self.beta_true.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "true beta must be finite and >= 0, got {}",
                self.beta_true
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidParameter("no models to compare".into()));
        }
        self.obs_scheme.validate()?;
        self.mcmc.validate()
    }

    pub fn noise_rates(&self) -> (f64, f64) {
        (self.eta, 1.0 - self.eta)
    }
}

/// Draws `z_true` by coupling from the past, then ratings per the scheme.
pub fn generate_dataset<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<(LatentField, Observations)> {
    config.validate()?;
    let nug = Nug::lattice(config.lattice);
    generate_on(&nug, config.beta_true, config.noise_rates(), config.obs_scheme, config.mcmc.cftp_step_cap, rng)
}

/// As [`generate_dataset`] on an arbitrary graph. Rates are used as given,
/// so `(0, 1)` yields noiseless ratings.
pub fn generate_on<R: Rng + ?Sized>(
    nug: &Nug,
    beta: f64,
    (eta0, eta1): (f64, f64),
    scheme: ObsScheme,
    cftp_cap: u64,
    rng: &mut R,
) -> Result<(LatentField, Observations)> {
    scheme.validate()?;
    if !(0.0..=1.0).contains(&eta0) || !(0.0..=1.0).contains(&eta1) {
        return Err(Error::InvalidParameter(format!("rates ({eta0}, {eta1}) outside [0, 1]")));
    }
    let z = cftp_ising(nug, beta, cftp_cap, rng)?;
    let y = (0..nug.n())
        .map(|i| {
            let rate = if z.get(i) == 1 { eta1 } else { eta0 };
            let m = scheme.draw(rng);
            (0..m).map(|_| rng.random_bool(rate) as u8).collect()
        })
        .collect();
    Ok((z, Observations::new(y)?))
}
