use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::cftp::cftp_ising;
use super::truncated_beta::sample_truncated_beta;
use super::{ChainState, McmcConfig, Model};
use crate::dag::{
    acyclic_orientation, posterior_spanning_tree, rooted_dag, uniform_spanning_tree, Dag, DagClass,
    Permutation,
};
use crate::error::{Error, Result};
use crate::graph::Nug;
use crate::model::{
    dgm_posterior_prob, eta_full_conditional_params, log_dgm_prior_raw, mrf_posterior_prob,
    pseudo_likelihood_raw, suff_stat_raw, NoiseParams, Observations, PriorSpec, SpatialParam,
};

fn require_dag(state: &ChainState) -> Result<&Dag> {
    state
        .dag
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("MDGM update requires a current DAG".into()))
}

/// One systematic sweep `i = 0..n` over the latent field, each site drawn
/// from its posterior full conditional under `model`.
pub fn gibbs_update_z<R: Rng + ?Sized>(
    state: &mut ChainState,
    nug: &Nug,
    model: Model,
    y: &Observations,
    rng: &mut R,
) -> Result<()> {
    let n = nug.n();
    if y.n() != n || state.z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.n().min(state.z.len()) });
    }
    let beta = state.beta.get();
    let eta = state.eta;
    let mut z = state.z.values().to_vec();
    match model.dag_class() {
        Some(_) => {
            let dag = require_dag(state)?;
            for i in 0..n {
                let p = dgm_posterior_prob(i, &z, dag, beta, &eta, y.ones(i), y.zeros(i));
                z[i] = (rng.random::<f64>() < p) as u8;
            }
        }
        None => {
            for i in 0..n {
                let p = mrf_posterior_prob(i, &z, nug, beta, &eta, y.ones(i), y.zeros(i));
                z[i] = (rng.random::<f64>() < p) as u8;
            }
        }
    }
    state.z = crate::model::LatentField::new(z).expect("binary");
    Ok(())
}

/// A draw from the prior of a DAG class: a uniform spanning tree, the
/// rooted DAG of a uniform root, or the orientation induced by a uniform
/// permutation.
pub fn propose_dag<R: Rng + ?Sized>(nug: &Nug, class: DagClass, rng: &mut R) -> Result<Dag> {
    match class {
        DagClass::SpanningTree => uniform_spanning_tree(nug, rng),
        DagClass::Rooted => rooted_dag(nug, rng.random_range(0..nug.n())),
        DagClass::AcyclicOrientation => acyclic_orientation(nug, &Permutation::random(nug.n(), rng)),
        DagClass::General => {
            Err(Error::InvalidParameter("no prior over general DAGs".into()))
        }
    }
}

/// Independence Metropolis-Hastings on the DAG with the class prior as the
/// proposal, so the acceptance ratio is the ratio of field densities.
/// Returns whether the proposal was accepted.
pub fn mh_update_dag<R: Rng + ?Sized>(
    state: &mut ChainState,
    nug: &Nug,
    class: DagClass,
    rng: &mut R,
) -> Result<bool> {
    if !matches!(class, DagClass::Rooted | DagClass::AcyclicOrientation) {
        return Err(Error::InvalidParameter(format!(
            "Metropolis-Hastings DAG update applies to rooted and orientation classes, not {class}"
        )));
    }
    let beta = state.beta.get();
    let proposal = propose_dag(nug, class, rng)?;
    let current = require_dag(state)?;
    let z = state.z.values();
    let log_ratio = log_dgm_prior_raw(z, &proposal, beta) - log_dgm_prior_raw(z, current, beta);
    let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    if accept {
        state.dag = Some(proposal);
    }
    Ok(accept)
}

/// Exact Gibbs draw of the spanning tree given the field.
pub fn direct_update_st<R: Rng + ?Sized>(state: &mut ChainState, nug: &Nug, rng: &mut R) -> Result<()> {
    state.dag = Some(posterior_spanning_tree(nug, &state.z, state.beta.get(), rng)?);
    Ok(())
}

fn propose_beta<R: Rng + ?Sized>(beta: f64, sd: f64, rng: &mut R) -> f64 {
    let step: f64 = StandardNormal.sample(rng);
    beta + sd * step
}

/// Random-walk Metropolis on `beta` against the MDGM field density
/// `p(z | D, beta)` or, for the aMRF, the pseudo-likelihood. Proposals
/// outside the prior support are rejected outright.
pub fn mh_update_beta<R: Rng + ?Sized>(
    state: &mut ChainState,
    nug: &Nug,
    config: &McmcConfig,
    rng: &mut R,
) -> Result<bool> {
    let model = config.model;
    let beta = state.beta.get();
    let beta_star = propose_beta(beta, config.beta_proposal_sd, rng);
    let priors = &config.priors;
    let log_prior_star = priors.log_beta_prior(beta_star);
    if log_prior_star == f64::NEG_INFINITY {
        return Ok(false);
    }
    let z = state.z.values();
    let log_f = |b: f64| -> Result<f64> {
        match model {
            Model::Amrf => Ok(pseudo_likelihood_raw(z, nug, b)),
            Model::ExactMrf => Err(Error::InvalidParameter(
                "the exact MRF updates beta with the exchange algorithm".into(),
            )),
            _ => Ok(log_dgm_prior_raw(z, require_dag(state)?, b)),
        }
    };
    let log_ratio = log_f(beta_star)? + log_prior_star - log_f(beta)? - priors.log_beta_prior(beta);
    let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    if accept {
        state.beta = SpatialParam::new(beta_star)?;
    }
    Ok(accept)
}

/// Log acceptance ratio of the exchange move from `beta` to `beta_star`,
/// with `t_z` and `t_aux` the sufficient statistics of the current field
/// and of the auxiliary exact draw at `beta_star`.
pub fn exchange_log_ratio(t_z: usize, t_aux: usize, beta: f64, beta_star: f64, priors: &PriorSpec) -> f64 {
    let (t_z, t_aux) = (t_z as f64, t_aux as f64);
    // h(z|b*) h(z*|b) / (h(z|b) h(z*|b*)) with h = exp(b T)
    (beta_star - beta) * (t_z - t_aux)
        + priors.log_beta_prior(beta_star)
        - priors.log_beta_prior(beta)
}

/// Exchange-algorithm update of `beta` for the exact MRF. The auxiliary
/// field is a perfect draw at the proposed value, so the partition
/// functions cancel.
pub fn exchange_update_beta_mrf<R: Rng + ?Sized>(
    state: &mut ChainState,
    nug: &Nug,
    config: &McmcConfig,
    rng: &mut R,
) -> Result<bool> {
    let beta = state.beta.get();
    let beta_star = propose_beta(beta, config.beta_proposal_sd, rng);
    if config.priors.log_beta_prior(beta_star) == f64::NEG_INFINITY {
        return Ok(false);
    }
    let aux = cftp_ising(nug, beta_star, config.cftp_step_cap, rng)?;
    let log_ratio = exchange_log_ratio(
        suff_stat_raw(state.z.values(), nug),
        suff_stat_raw(aux.values(), nug),
        beta,
        beta_star,
        &config.priors,
    );
    let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
    if accept {
        state.beta = SpatialParam::new(beta_star)?;
    }
    Ok(accept)
}

/// Gibbs update of `eta1` then `eta0` from their truncated beta full
/// conditionals. Returns the number of stalls (0, 1 or 2): a rate whose
/// truncated draw failed keeps its current value.
pub fn gibbs_update_eta<R: Rng + ?Sized>(
    state: &mut ChainState,
    y: &Observations,
    priors: &PriorSpec,
    rng: &mut R,
) -> Result<usize> {
    let params = eta_full_conditional_params(y, &state.z, priors)?;
    let mut stalls = 0;
    let (mut eta0, mut eta1) = (state.eta.eta0(), state.eta.eta1());
    match sample_truncated_beta(params.eta1, eta0, 1.0, rng) {
        Some(v) if v > eta0 && v < 1.0 => eta1 = v,
        _ => stalls += 1,
    }
    match sample_truncated_beta(params.eta0, 0.0, eta1, rng) {
        Some(v) if v > 0.0 && v < eta1 => eta0 = v,
        _ => stalls += 1,
    }
    state.eta = NoiseParams::new(eta0, eta1)?;
    Ok(stalls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{LatticeSpec, Neighborhood};
    use crate::model::{log_dgm_prior, LatentField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn four_cycle() -> Nug {
        Nug::from_pairs(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    fn state(z: Vec<u8>, dag: Option<Dag>, beta: f64, eta: (f64, f64)) -> ChainState {
        ChainState {
            z: LatentField::new(z).unwrap(),
            dag,
            beta: SpatialParam::new(beta).unwrap(),
            eta: NoiseParams::new(eta.0, eta.1).unwrap(),
            iteration: 0,
        }
    }

    fn config(model: Model, sd: f64) -> McmcConfig {
        let mut c = McmcConfig::new(model, 10, 0, 1);
        c.beta_proposal_sd = sd;
        c
    }

    #[test]
    fn likelihood_only_conditional() {
        // beta = 0 and y_i = [1, 1]: P(z_i = 1) = 0.64 / (0.64 + 0.04)
        let g = Nug::lattice(LatticeSpec::new(3, 3, Neighborhood::Second).unwrap());
        let y = Observations::new(vec![vec![1, 1]; 9]).unwrap();
        let expected = 0.64 / 0.68;
        for model in Model::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let dag = model.dag_class().map(|c| propose_dag(&g, c, &mut rng).unwrap());
            let mut s = state(vec![0; 9], dag, 0.0, (0.2, 0.8));
            let mut ones = 0;
            let sweeps = 4000;
            for _ in 0..sweeps {
                gibbs_update_z(&mut s, &g, model, &y, &mut rng).unwrap();
                ones += s.z.ones();
            }
            let f = ones as f64 / (9 * sweeps) as f64;
            assert!((f - expected).abs() < 0.01, "{model}: {f}");
        }
    }

    #[test]
    fn unobserved_flat_conditional() {
        let g = four_cycle();
        let y = Observations::empty(4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = state(vec![1, 0, 1, 0], None, 0.0, (0.2, 0.8));
        let mut ones = 0;
        for _ in 0..10_000 {
            gibbs_update_z(&mut s, &g, Model::Amrf, &y, &mut rng).unwrap();
            ones += s.z.ones();
        }
        assert!((ones as f64 / 40_000.0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn dag_update_needs_a_dag() {
        let g = four_cycle();
        let y = Observations::empty(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = state(vec![0; 4], None, 0.3, (0.2, 0.8));
        assert!(gibbs_update_z(&mut s, &g, Model::MdgmAo, &y, &mut rng).is_err());
    }

    #[test]
    fn dag_moves_at_beta_zero_always_accepted() {
        let g = Nug::lattice(LatticeSpec::new(3, 4, Neighborhood::Second).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for class in [DagClass::Rooted, DagClass::AcyclicOrientation] {
            let dag = propose_dag(&g, class, &mut rng).unwrap();
            let mut s = state((0..12).map(|i| (i % 3 == 0) as u8).collect(), Some(dag), 0.0, (0.2, 0.8));
            for _ in 0..200 {
                assert!(mh_update_dag(&mut s, &g, class, &mut rng).unwrap());
            }
        }
    }

    #[test]
    fn constant_field_rooted_moves_always_accepted() {
        // all rooted DAGs of the 4-cycle share the parent-count profile
        // (0, 1, 1, 2), so a constant field has the same density under each
        let g = four_cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = state(vec![1; 4], Some(rooted_dag(&g, 0).unwrap()), 0.7, (0.2, 0.8));
        for _ in 0..200 {
            assert!(mh_update_dag(&mut s, &g, DagClass::Rooted, &mut rng).unwrap());
        }
    }

    #[test]
    fn rooted_stationary_distribution() {
        let g = four_cycle();
        let z = LatentField::new(vec![1, 1, 0, 1]).unwrap();
        let beta = 0.9;
        let exact: Vec<f64> = (0..4)
            .map(|r| log_dgm_prior(&z, &rooted_dag(&g, r).unwrap(), beta).unwrap().exp())
            .collect();
        let total: f64 = exact.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut s = state(z.values().to_vec(), Some(rooted_dag(&g, 0).unwrap()), beta, (0.2, 0.8));
        let mut counts = [0usize; 4];
        let steps = 100_000;
        for _ in 0..steps {
            mh_update_dag(&mut s, &g, DagClass::Rooted, &mut rng).unwrap();
            counts[s.dag.as_ref().unwrap().root().unwrap()] += 1;
        }
        let tv: f64 = (0..4).map(|r| (exact[r] / total - counts[r] as f64 / steps as f64).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn st_direct_update_uniform_for_constant_field() {
        let g = four_cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = state(vec![0; 4], None, 0.8, (0.2, 0.8));
        let mut counts: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
        for _ in 0..40_000 {
            direct_update_st(&mut s, &g, &mut rng).unwrap();
            *counts.entry(s.dag.as_ref().unwrap().skeleton_edges()).or_default() += 1;
        }
        assert_eq!(counts.len(), 4);
        for c in counts.values() {
            assert!((*c as f64 / 40_000.0 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn beta_outside_support_rejected() {
        let g = four_cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = config(Model::Amrf, 50.0);
        let mut s = state(vec![0, 1, 1, 0], None, 0.5, (0.2, 0.8));
        let mut accepted = 0;
        for _ in 0..1000 {
            if mh_update_beta(&mut s, &g, &cfg, &mut rng).unwrap() {
                accepted += 1;
            }
            assert!((0.0..=1.0).contains(&s.beta.get()));
        }
        // with sd 50 nearly every proposal leaves [0, 1]
        assert!(accepted < 60, "{accepted}");
    }

    #[test]
    fn tiny_steps_nearly_always_accepted() {
        let g = four_cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = config(Model::MdgmRooted, 1e-9);
        let mut s = state(vec![0, 1, 1, 0], Some(rooted_dag(&g, 1).unwrap()), 0.5, (0.2, 0.8));
        for _ in 0..100 {
            assert!(mh_update_beta(&mut s, &g, &cfg, &mut rng).unwrap());
        }
        let cfg = config(Model::ExactMrf, 1e-9);
        for _ in 0..100 {
            assert!(exchange_update_beta_mrf(&mut s, &g, &cfg, &mut rng).unwrap());
        }
    }

    #[test]
    fn exact_mrf_rejects_plain_beta_update() {
        let g = four_cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cfg = config(Model::ExactMrf, 0.1);
        let mut s = state(vec![0; 4], None, 0.5, (0.2, 0.8));
        let mut saw_err = false;
        for _ in 0..20 {
            saw_err |= mh_update_beta(&mut s, &g, &cfg, &mut rng).is_err();
        }
        assert!(saw_err);
    }

    #[test]
    fn exchange_ratio_identity() {
        let priors = PriorSpec::default();
        assert_eq!(exchange_log_ratio(7, 3, 0.4, 0.4, &priors), 0.0);
        for (tz, ta, b, bs) in [(10, 4, 0.2, 0.35), (3, 9, 0.5, 0.1), (0, 0, 0.0, 0.9)] {
            let direct = (bs - b) * (tz as f64 - ta as f64);
            assert!((exchange_log_ratio(tz, ta, b, bs, &priors) - direct).abs() < 1e-12);
        }
        assert_eq!(exchange_log_ratio(1, 1, 0.5, 1.5, &priors), f64::NEG_INFINITY);
    }

    #[test]
    fn eta_prior_only_is_uniform_on_triangle() {
        // no data, Beta(1,1) priors: the stationary law is uniform on the
        // triangle 0 < eta0 < eta1 < 1 (area 1/2). The part with eta1 <= 1/2
        // has area 1/8, so P(eta1 > 1/2) = 3/4.
        let y = Observations::empty(3);
        let priors = PriorSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut s = state(vec![0; 3], None, 0.0, (0.25, 0.75));
        let steps = 100_000;
        let mut above = 0;
        let mut eta0_sum = 0.0;
        for _ in 0..steps {
            assert_eq!(gibbs_update_eta(&mut s, &y, &priors, &mut rng).unwrap(), 0);
            assert!(s.eta.eta0() < s.eta.eta1());
            if s.eta.eta1() > 0.5 {
                above += 1;
            }
            eta0_sum += s.eta.eta0();
        }
        let p = above as f64 / steps as f64;
        assert!((p - 0.75).abs() < 0.01, "{p}");
        // E[eta0] over the triangle is 1/3
        assert!((eta0_sum / steps as f64 - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn eta_concentrates_with_data() {
        // 10^4 ratings at z = 1 with 80% ones, 10^4 at z = 0 with 10% ones
        let mut units = vec![Vec::new(); 2];
        for k in 0..10_000 {
            units[1].push((k % 10 < 8) as u8);
            units[0].push((k % 10 < 1) as u8);
        }
        let y = Observations::new(units).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut s = state(vec![0, 1], None, 0.0, (0.25, 0.75));
        for _ in 0..200 {
            gibbs_update_eta(&mut s, &y, &PriorSpec::default(), &mut rng).unwrap();
            assert!((s.eta.eta1() - 0.8).abs() < 0.02);
            assert!((s.eta.eta0() - 0.1).abs() < 0.02);
        }
    }
}
