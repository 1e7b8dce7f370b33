//! Densities and full conditionals for the hierarchical model.
//!
//! Latent states are binary. Observations at unit `i` are Bernoulli with
//! success rate `eta[z_i]`. The spatial prior is one of
//!
//! * a DGM: `p(z | D, beta) = prod_i p(z_i | z_parents(i))`, where each
//!   conditional is `exp(beta * #{parents equal to z_i})` normalized over
//!   `z_i`, and an orphan is a fair coin;
//! * the pairwise MRF `p(z | beta) ∝ exp(beta * T(z))`, with `T(z)` the
//!   number of neighboring pairs sharing a value;
//! * the MRF pseudo-likelihood, the product of its full conditionals.
//!
//! Everything is evaluated in log space.

use serde::{Deserialize, Serialize};

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::graph::Nug;

/// `log(exp(a) + exp(b))`.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-x))`.
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A binary latent field, one value per areal unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatentField {
    z: Vec<u8>,
}

impl LatentField {
    pub fn new(z: Vec<u8>) -> Result<Self> {
        if let Some(bad) = z.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!("latent values must be 0 or 1, got {bad}")));
        }
        Ok(LatentField { z })
    }

    pub fn zeros(n: usize) -> Self {
        LatentField { z: vec![0; n] }
    }

    pub fn from_fn<F: FnMut(usize) -> u8>(n: usize, mut f: F) -> Self {
        LatentField { z: (0..n).map(|i| f(i) & 1).collect() }
    }

    /// Configuration `k` of `n` units: bit `i` of `k` is `z_i`.
    pub fn from_index(n: usize, k: u64) -> Self {
        Self::from_fn(n, |i| (k >> i & 1) as u8)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.z
    }

    pub fn get(&self, i: usize) -> u8 {
        self.z[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.z[i] = v as u8;
    }

    pub fn ones(&self) -> usize {
        self.z.iter().filter(|&&v| v == 1).count()
    }

    /// The globally flipped field `1 - z`.
    pub fn flipped(&self) -> Self {
        LatentField { z: self.z.iter().map(|&v| 1 - v).collect() }
    }

    /// Compact `"0110..."` encoding.
    pub fn to_bitstring(&self) -> String {
        self.z.iter().map(|&v| if v == 1 { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidParameter(format!("invalid bit '{other}'"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(|z| LatentField { z })
    }
}

/// Ragged binary ratings. Unit `i` holds `m_i >= 0` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observations {
    y: Vec<Vec<u8>>,
    ones: Vec<u32>,
}

impl Observations {
    pub fn new(y: Vec<Vec<u8>>) -> Result<Self> {
        if y.iter().flatten().any(|&v| v > 1) {
            return Err(Error::InvalidParameter("observations must be 0 or 1".into()));
        }
        let ones = y.iter().map(|u| u.iter().map(|&v| u32::from(v)).sum()).collect();
        Ok(Observations { y, ones })
    }

    pub fn empty(n: usize) -> Self {
        Observations { y: vec![Vec::new(); n], ones: vec![0; n] }
    }

    /// Collects `(unit, value)` pairs in file order.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, u8)>,
    {
        let mut y = vec![Vec::new(); n];
        for (i, v) in pairs {
            if i >= n {
                return Err(Error::DimensionMismatch { expected: n, got: i + 1 });
            }
            y[i].push(v);
        }
        Self::new(y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn unit(&self, i: usize) -> &[u8] {
        &self.y[i]
    }

    pub fn m(&self, i: usize) -> usize {
        self.y[i].len()
    }

    pub fn ones(&self, i: usize) -> usize {
        self.ones[i] as usize
    }

    pub fn zeros(&self, i: usize) -> usize {
        self.m(i) - self.ones(i)
    }

    pub fn total(&self) -> usize {
        self.y.iter().map(Vec::len).sum()
    }

    /// Mean rating at unit `i`, `None` when unobserved.
    pub fn unit_mean(&self, i: usize) -> Option<f64> {
        (self.m(i) > 0).then(|| self.ones(i) as f64 / self.m(i) as f64)
    }

    /// Units with at least one rating.
    pub fn rated_units(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.m(i) > 0).collect()
    }

    /// Whether some unit has repeated ratings, which the noise rates need to
    /// be identifiable.
    pub fn has_replicates(&self) -> bool {
        self.y.iter().any(|u| u.len() > 1)
    }

    /// The same data with every rating of `units` removed.
    pub fn without_units(&self, units: &[usize]) -> Self {
        let mut y = self.y.clone();
        for &i in units {
            y[i].clear();
        }
        Observations::new(y).expect("values already validated")
    }

    /// Iterates `(unit, value)` pairs in unit order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.y.iter().enumerate().flat_map(|(i, u)| u.iter().map(move |&v| (i, v)))
    }
}

/// Noise rates with `0 < eta0 < eta1 < 1`; the ordering fixes the labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct NoiseParams {
    eta0: f64,
    eta1: f64,
}

impl NoiseParams {
    pub fn new(eta0: f64, eta1: f64) -> Result<Self> {
        if !(eta0 > 0.0 && eta1 < 1.0 && eta0 < eta1) {
            return Err(Error::InvalidParameter(format!(
                "noise rates need 0 < eta0 < eta1 < 1, got ({eta0}, {eta1})"
            )));
        }
        Ok(NoiseParams { eta0, eta1 })
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    /// Rate for latent state `state`.
    pub fn rate(&self, state: u8) -> f64 {
        if state == 1 {
            self.eta1
        } else {
            self.eta0
        }
    }
}

impl TryFrom<(f64, f64)> for NoiseParams {
    type Error = Error;

    fn try_from((a, b): (f64, f64)) -> Result<Self> {
        NoiseParams::new(a, b)
    }
}

impl From<NoiseParams> for (f64, f64) {
    fn from(p: NoiseParams) -> Self {
        (p.eta0, p.eta1)
    }
}

/// Spatial dependence `beta >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SpatialParam(f64);

impl SpatialParam {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(SpatialParam(beta))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SpatialParam {
    type Error = Error;

    fn try_from(b: f64) -> Result<Self> {
        SpatialParam::new(b)
    }
}

impl From<SpatialParam> for f64 {
    fn from(b: SpatialParam) -> Self {
        b.0
    }
}

/// Shape parameters of a beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaShape {
    pub a: f64,
    pub b: f64,
}

impl BetaShape {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta shapes must be positive, got ({a}, {b})"
            )));
        }
        Ok(BetaShape { a, b })
    }
}

/// Priors: beta distributions on the two noise rates (jointly truncated to
/// `eta0 < eta1`) and `beta ~ Uniform(0, beta_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub eta0: BetaShape,
    pub eta1: BetaShape,
    pub beta_max: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            eta0: BetaShape { a: 1.0, b: 1.0 },
            eta1: BetaShape { a: 1.0, b: 1.0 },
            beta_max: 1.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        BetaShape::new(self.eta0.a, self.eta0.b)?;
        BetaShape::new(self.eta1.a, self.eta1.b)?;
        if !(self.beta_max > 0.0 && self.beta_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta_max must be positive, got {}",
                self.beta_max
            )));
        }
        Ok(())
    }

    /// Log prior density of `beta`; `-inf` outside `[0, beta_max]`.
    pub fn log_beta_prior(&self, beta: f64) -> f64 {
        if (0.0..=self.beta_max).contains(&beta) {
            -self.beta_max.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Log-likelihood of a unit with `ones` successes and `zeros` failures in
/// latent state `state`.
#[inline]
pub(crate) fn unit_log_likelihood(ones: usize, zeros: usize, state: u8, eta: &NoiseParams) -> f64 {
    let rate = eta.rate(state);
    let mut ll = 0.0;
    if ones > 0 {
        ll += ones as f64 * rate.ln();
    }
    if zeros > 0 {
        ll += zeros as f64 * (-rate).ln_1p();
    }
    ll
}

/// Bernoulli log-likelihood of all ratings.
pub fn log_likelihood(y: &Observations, z: &LatentField, eta: &NoiseParams) -> Result<f64> {
    check_len(y.n(), z.len())?;
    Ok((0..y.n()).map(|i| unit_log_likelihood(y.ones(i), y.zeros(i), z.get(i), eta)).sum())
}

/// Log of the DGM conditional of `zi` given `c0` parents at 0 and `c1`
/// parents at 1.
#[inline]
fn log_parent_term(zi: u8, c0: usize, c1: usize, beta: f64) -> f64 {
    let matches = if zi == 1 { c1 } else { c0 };
    beta * matches as f64 - log_add_exp(beta * c0 as f64, beta * c1 as f64)
}

/// `p(z_i | z_parents)` for a DGM. With no parents both sums are zero and
/// the result is 1/2.
pub fn parent_conditional(zi: u8, z_parents: &[u8], beta: f64) -> f64 {
    let c1 = z_parents.iter().filter(|&&v| v == 1).count();
    log_parent_term(zi, z_parents.len() - c1, c1, beta).exp()
}

fn parent_counts(z: &[u8], parents: &[usize]) -> (usize, usize) {
    let c1 = parents.iter().filter(|&&p| z[p] == 1).count();
    (parents.len() - c1, c1)
}

/// `log p(z | D, beta)`, the sum of per-vertex parent conditionals.
pub fn log_dgm_prior(z: &LatentField, dag: &Dag, beta: f64) -> Result<f64> {
    check_len(dag.n(), z.len())?;
    Ok(log_dgm_prior_raw(z.values(), dag, beta))
}

pub(crate) fn log_dgm_prior_raw(z: &[u8], dag: &Dag, beta: f64) -> f64 {
    (0..z.len())
        .map(|i| {
            let (c0, c1) = parent_counts(z, dag.parents(i));
            log_parent_term(z[i], c0, c1, beta)
        })
        .sum()
}

/// Log prior weight of each value of `z_i` given the rest of the field:
/// its own parent term plus the terms of its children.
fn dgm_local_log_weights(i: usize, z: &[u8], dag: &Dag, beta: f64) -> [f64; 2] {
    let (c0, c1) = parent_counts(z, dag.parents(i));
    let mut w = [log_parent_term(0, c0, c1, beta), log_parent_term(1, c0, c1, beta)];
    for &k in dag.children(i) {
        let (mut k0, mut k1) = parent_counts(z, dag.parents(k));
        // remove i's own contribution, then add it back under each value
        if z[i] == 1 {
            k1 -= 1;
        } else {
            k0 -= 1;
        }
        w[0] += log_parent_term(z[k], k0 + 1, k1, beta);
        w[1] += log_parent_term(z[k], k0, k1 + 1, beta);
    }
    w
}

/// `P(z_i = 1 | z_-i, D, beta)` under the DGM prior.
pub fn dgm_full_conditional_prior(i: usize, z: &LatentField, dag: &Dag, beta: f64) -> f64 {
    let [w0, w1] = dgm_local_log_weights(i, z.values(), dag, beta);
    logistic(w1 - w0)
}

/// `P(z_i = 1 | z_-i, D, beta, eta, y_i)`.
pub fn dgm_full_conditional_posterior(
    i: usize,
    z: &LatentField,
    dag: &Dag,
    beta: f64,
    eta: &NoiseParams,
    y_i: &[u8],
) -> f64 {
    let ones = y_i.iter().filter(|&&v| v == 1).count();
    dgm_posterior_prob(i, z.values(), dag, beta, eta, ones, y_i.len() - ones)
}

#[inline]
pub(crate) fn dgm_posterior_prob(
    i: usize,
    z: &[u8],
    dag: &Dag,
    beta: f64,
    eta: &NoiseParams,
    ones: usize,
    zeros: usize,
) -> f64 {
    let [w0, w1] = dgm_local_log_weights(i, z, dag, beta);
    let l0 = unit_log_likelihood(ones, zeros, 0, eta);
    let l1 = unit_log_likelihood(ones, zeros, 1, eta);
    logistic((w1 + l1) - (w0 + l0))
}

/// `T(z)`: the number of NUG edges whose endpoints share a value.
pub fn suff_stat_t(z: &LatentField, nug: &Nug) -> Result<usize> {
    check_len(nug.n(), z.len())?;
    Ok(suff_stat_raw(z.values(), nug))
}

pub(crate) fn suff_stat_raw(z: &[u8], nug: &Nug) -> usize {
    nug.edges().iter().filter(|e| z[e.lo] == z[e.hi]).count()
}

/// `beta * T(z)`, the log of the unnormalized MRF density.
pub fn mrf_log_unnorm(z: &LatentField, nug: &Nug, beta: f64) -> Result<f64> {
    Ok(beta * suff_stat_t(z, nug)? as f64)
}

#[inline]
fn neighbor_counts(i: usize, z: &[u8], nug: &Nug) -> (usize, usize) {
    parent_counts(z, nug.neighbors(i))
}

/// Log-odds of `z_i = 1` under the MRF given the neighbors.
#[inline]
pub(crate) fn mrf_log_odds(i: usize, z: &[u8], nug: &Nug, beta: f64) -> f64 {
    let (c0, c1) = neighbor_counts(i, z, nug);
    beta * (c1 as f64 - c0 as f64)
}

/// `P(z_i = 1 | z_neighbors, beta)` under the MRF. An isolated vertex gives
/// 1/2.
pub fn mrf_full_conditional(i: usize, z: &LatentField, nug: &Nug, beta: f64) -> f64 {
    logistic(mrf_log_odds(i, z.values(), nug, beta))
}

/// `P(z_i = 1 | z_neighbors, beta, eta, y_i)` under the MRF.
pub fn mrf_full_conditional_posterior(
    i: usize,
    z: &LatentField,
    nug: &Nug,
    beta: f64,
    eta: &NoiseParams,
    y_i: &[u8],
) -> f64 {
    let ones = y_i.iter().filter(|&&v| v == 1).count();
    mrf_posterior_prob(i, z.values(), nug, beta, eta, ones, y_i.len() - ones)
}

#[inline]
pub(crate) fn mrf_posterior_prob(
    i: usize,
    z: &[u8],
    nug: &Nug,
    beta: f64,
    eta: &NoiseParams,
    ones: usize,
    zeros: usize,
) -> f64 {
    let l0 = unit_log_likelihood(ones, zeros, 0, eta);
    let l1 = unit_log_likelihood(ones, zeros, 1, eta);
    logistic(mrf_log_odds(i, z, nug, beta) + l1 - l0)
}

/// Log pseudo-likelihood: the sum over units of the log MRF full
/// conditional evaluated at the current value.
pub fn pseudo_likelihood_log(z: &LatentField, nug: &Nug, beta: f64) -> Result<f64> {
    check_len(nug.n(), z.len())?;
    Ok(pseudo_likelihood_raw(z.values(), nug, beta))
}

pub(crate) fn pseudo_likelihood_raw(z: &[u8], nug: &Nug, beta: f64) -> f64 {
    (0..z.len())
        .map(|i| {
            let (c0, c1) = neighbor_counts(i, z, nug);
            log_parent_term(z[i], c0, c1, beta)
        })
        .sum()
}

/// Beta shapes of the noise-rate full conditionals. `eta1`'s conditional is
/// truncated to `(eta0, 1)` and `eta0`'s to `(0, eta1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaConditionalParams {
    pub eta0: BetaShape,
    pub eta1: BetaShape,
}

pub fn eta_full_conditional_params(
    y: &Observations,
    z: &LatentField,
    priors: &PriorSpec,
) -> Result<EtaConditionalParams> {
    check_len(y.n(), z.len())?;
    let mut counts = [[0usize; 2]; 2]; // [state][ones, zeros]
    for i in 0..y.n() {
        let s = z.get(i) as usize;
        counts[s][0] += y.ones(i);
        counts[s][1] += y.zeros(i);
    }
    Ok(EtaConditionalParams {
        eta0: BetaShape {
            a: priors.eta0.a + counts[0][0] as f64,
            b: priors.eta0.b + counts[0][1] as f64,
        },
        eta1: BetaShape {
            a: priors.eta1.a + counts[1][0] as f64,
            b: priors.eta1.b + counts[1][1] as f64,
        },
    })
}
