//! Exact posterior quantities by brute-force enumeration, for validating the
//! samplers on tiny graphs. Nothing here is used by the samplers themselves.

use std::collections::HashMap;

use num_traits::ToPrimitive;

use crate::dag::{acyclic_orientation, rooted_dag, Dag, DagClass, Permutation};
use crate::error::{Error, Result};
use crate::graph::{count_spanning_trees, Nug};
use crate::model::{
    log_add_exp, log_dgm_prior_raw, pseudo_likelihood_raw, suff_stat_raw, unit_log_likelihood,
    NoiseParams, Observations,
};
use crate::samplers::Model;

pub const MAX_ORACLE_VERTICES: usize = 12;
pub const MAX_ORACLE_TREES: u64 = 10_000;
pub const MAX_ORACLE_PERMUTATION_VERTICES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `P(z_i = 1 | y, beta, eta)`.
    pub marginals: Vec<f64>,
    /// Log of `sum_z p(y | z, eta) * prior(z | beta)`, the prior being the
    /// DAG mixture, the normalized MRF, or the pseudo-likelihood.
    pub log_evidence: f64,
    /// `log R(beta)`, the MRF log partition function.
    pub log_partition: f64,
    /// `sum_z g(z | beta)` for the pseudo-likelihood `g`.
    pub pseudo_likelihood_total: f64,
}

/// A DAG class enumerated with prior weights.
struct DagMixture {
    dags: Vec<(Dag, f64)>,
}

impl DagMixture {
    fn new(nug: &Nug, class: DagClass) -> Result<Self> {
        let n = nug.n();
        let dags = match class {
            DagClass::SpanningTree => {
                let count = count_spanning_trees(nug)?;
                if count.to_u64().is_none_or(|c| c > MAX_ORACLE_TREES) {
                    return Err(Error::TooLarge(format!(
                        "{count} spanning trees exceeds {MAX_ORACLE_TREES}"
                    )));
                }
                let trees = enumerate_spanning_trees(nug);
                let w = 1.0 / trees.len() as f64;
                trees.into_iter().map(|d| (d, w)).collect()
            }
            DagClass::Rooted => {
                let w = 1.0 / n as f64;
                (0..n).map(|r| Ok((rooted_dag(nug, r)?, w))).collect::<Result<_>>()?
            }
            DagClass::AcyclicOrientation => {
                if n > MAX_ORACLE_PERMUTATION_VERTICES {
                    return Err(Error::TooLarge(format!(
                        "orientation enumeration needs n <= {MAX_ORACLE_PERMUTATION_VERTICES}, got {n}"
                    )));
                }
                let mut tally: HashMap<Vec<(usize, usize)>, (Dag, usize)> = HashMap::new();
                let mut total = 0usize;
                for_each_permutation(n, |order| {
                    let d = acyclic_orientation(nug, &Permutation::new(order.to_vec()).unwrap())
                        .unwrap();
                    let key: Vec<_> = d.arcs().collect();
                    tally.entry(key).or_insert((d, 0)).1 += 1;
                    total += 1;
                });
                let mut dags: Vec<_> = tally
                    .into_values()
                    .map(|(d, c)| (d, c as f64 / total as f64))
                    .collect();
                dags.sort_by(|a, b| a.0.arcs().cmp(b.0.arcs()));
                dags
            }
            DagClass::General => {
                return Err(Error::InvalidParameter("no prior over general DAGs".into()))
            }
        };
        Ok(DagMixture { dags })
    }

    fn log_prior(&self, z: &[u8], beta: f64) -> f64 {
        self.dags
            .iter()
            .map(|(d, w)| w.ln() + log_dgm_prior_raw(z, d, beta))
            .fold(f64::NEG_INFINITY, log_add_exp)
    }
}

/// Every spanning tree of a connected graph, rooted at vertex 0.
pub fn enumerate_spanning_trees(nug: &Nug) -> Vec<Dag> {
    let n = nug.n();
    let edges: Vec<(usize, usize)> = nug.edges().iter().map(|e| (e.lo, e.hi)).collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    let mut excluded = vec![false; edges.len()];
    search_trees(n, &edges, 0, &mut chosen, &mut excluded, &mut out);
    out.into_iter().map(|tree| orient_from(n, &tree, 0)).collect()
}

fn search_trees(
    n: usize,
    edges: &[(usize, usize)],
    k: usize,
    chosen: &mut Vec<(usize, usize)>,
    excluded: &mut [bool],
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    if chosen.len() + 1 == n || n == 0 {
        out.push(chosen.clone());
        return;
    }
    if k == edges.len() {
        return;
    }
    // include edge k when it joins two components
    if !connects(n, chosen, edges[k]) {
        chosen.push(edges[k]);
        search_trees(n, edges, k + 1, chosen, excluded, out);
        chosen.pop();
    }
    // exclude edge k when the remaining graph stays connected
    excluded[k] = true;
    let available: Vec<_> = edges
        .iter()
        .enumerate()
        .filter(|&(j, _)| !excluded[j])
        .map(|(_, &e)| e)
        .collect();
    if Nug::from_pairs(n, available).map(|g| g.is_connected()).unwrap_or(false) {
        search_trees(n, edges, k + 1, chosen, excluded, out);
    }
    excluded[k] = false;
}

/// Whether `a` and `b` are already joined by `forest`.
fn connects(n: usize, forest: &[(usize, usize)], (a, b): (usize, usize)) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(u, v) in forest {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        parent[ru] = rv;
    }
    find(&mut parent, a) == find(&mut parent, b)
}

fn orient_from(n: usize, tree: &[(usize, usize)], root: usize) -> Dag {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in tree {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut arcs = Vec::with_capacity(tree.len());
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                arcs.push((v, u));
                stack.push(u);
            }
        }
    }
    Dag::from_arcs(n, arcs, DagClass::SpanningTree, Some(root)).expect("tree orientation")
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut f: F) {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Exact marginals and normalizing constants at fixed `beta` and `eta`.
pub fn exact_posterior_oracle(
    y: &Observations,
    nug: &Nug,
    beta: f64,
    eta: &NoiseParams,
    model: Model,
) -> Result<OracleResult> {
    let n = nug.n();
    if n > MAX_ORACLE_VERTICES {
        return Err(Error::TooLarge(format!(
            "oracle enumerates 2^n fields and needs n <= {MAX_ORACLE_VERTICES}, got {n}"
        )));
    }
    if y.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.n() });
    }
    let mixture = match model.dag_class() {
        Some(class) => Some(DagMixture::new(nug, class)?),
        None => None,
    };

    let states = 1u64 << n;
    let mut z = vec![0u8; n];
    let mut log_partition = f64::NEG_INFINITY;
    let mut pseudo_total = 0.0;
    // log p(y|z) + log prior(z), the prior unnormalized for the MRF
    let mut log_joint = Vec::with_capacity(states as usize);
    for k in 0..states {
        for (i, v) in z.iter_mut().enumerate() {
            *v = (k >> i & 1) as u8;
        }
        let log_h = beta * suff_stat_raw(&z, nug) as f64;
        log_partition = log_add_exp(log_partition, log_h);
        let log_g = pseudo_likelihood_raw(&z, nug, beta);
        pseudo_total += log_g.exp();
        let log_prior = match (&mixture, model) {
            (Some(m), _) => m.log_prior(&z, beta),
            (None, Model::Amrf) => log_g,
            (None, _) => log_h,
        };
        let log_lik: f64 =
            (0..n).map(|i| unit_log_likelihood(y.ones(i), y.zeros(i), z[i], eta)).sum();
        log_joint.push(log_lik + log_prior);
    }
    if model == Model::ExactMrf {
        for lj in &mut log_joint {
            *lj -= log_partition;
        }
    }
    let log_evidence = log_joint.iter().copied().fold(f64::NEG_INFINITY, log_add_exp);
    let mut marginals = vec![0.0; n];
    for (k, lj) in log_joint.iter().enumerate() {
        let p = (lj - log_evidence).exp();
        for (i, m) in marginals.iter_mut().enumerate() {
            if k >> i & 1 == 1 {
                *m += p;
            }
        }
    }
    Ok(OracleResult { marginals, log_evidence, log_partition, pseudo_likelihood_total: pseudo_total })
}

/// The posterior of `beta` under `Uniform(0, beta_max)` at fixed `eta`,
/// tabulated on an even grid, with the latent marginals integrated over it.
#[derive(Debug, Clone)]
pub struct BetaPosteriorGrid {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub cdf: Vec<f64>,
    pub marginals: Vec<f64>,
}

impl BetaPosteriorGrid {
    /// Linear interpolation of the CDF.
    pub fn cdf_at(&self, beta: f64) -> f64 {
        let (lo, hi) = (self.grid[0], *self.grid.last().unwrap());
        if beta <= lo {
            return 0.0;
        }
        if beta >= hi {
            return 1.0;
        }
        let h = self.grid[1] - self.grid[0];
        let k = (((beta - lo) / h) as usize).min(self.grid.len() - 2);
        let t = (beta - self.grid[k]) / h;
        self.cdf[k] * (1.0 - t) + self.cdf[k + 1] * t
    }

    /// Kolmogorov-Smirnov distance between draws and the tabulated CDF.
    pub fn ks_distance(&self, draws: &[f64]) -> f64 {
        let mut sorted = draws.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let m = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let f = self.cdf_at(x);
                (f - k as f64 / m).abs().max(((k + 1) as f64 / m - f).abs())
            })
            .fold(0.0, f64::max)
    }
}

pub fn beta_posterior_grid(
    y: &Observations,
    nug: &Nug,
    eta: &NoiseParams,
    model: Model,
    beta_max: f64,
    points: usize,
) -> Result<BetaPosteriorGrid> {
    if points < 2 {
        return Err(Error::InvalidParameter("grid needs at least two points".into()));
    }
    let grid: Vec<f64> = (0..points).map(|k| beta_max * k as f64 / (points - 1) as f64).collect();
    let results: Vec<OracleResult> = grid
        .iter()
        .map(|&b| exact_posterior_oracle(y, nug, b, eta, model))
        .collect::<Result<_>>()?;
    let max_log = results.iter().map(|r| r.log_evidence).fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = results.iter().map(|r| (r.log_evidence - max_log).exp()).collect();
    let h = grid[1] - grid[0];
    // cumulative trapezoid
    let mut cdf = vec![0.0; points];
    for k in 1..points {
        cdf[k] = cdf[k - 1] + 0.5 * h * (unnorm[k - 1] + unnorm[k]);
    }
    let total = cdf[points - 1];
    let density: Vec<f64> = unnorm.iter().map(|u| u / total).collect();
    for c in &mut cdf {
        *c /= total;
    }
    let n = nug.n();
    let mut marginals = vec![0.0; n];
    for k in 0..points {
        let w = if k == 0 || k == points - 1 { 0.5 * h } else { h } * density[k];
        for (m, r) in marginals.iter_mut().zip(&results[k].marginals) {
            *m += w * r;
        }
    }
    Ok(BetaPosteriorGrid { grid, density, cdf, marginals })
}
