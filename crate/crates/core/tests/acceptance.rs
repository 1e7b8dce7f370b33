//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::HashMap;
use std::io::Write as _;
use std::time::Instant;

use mdgm::dag::{
    acyclic_orientation, posterior_spanning_tree, rooted_dag, uniform_spanning_tree, Dag,
    DagClass, Permutation,
};
use mdgm::experiments::{
    beta_posterior_grid, cross_validate, exact_posterior_oracle, run_simulation_study,
    write_study_csv, ObsScheme, SimConfig, CV_CSV_HEADER,
};
use mdgm::experiments::oracle::enumerate_spanning_trees;
use mdgm::graph::{
    count_acyclic_orientations, count_spanning_trees, LatticeSpec, Neighborhood, Nug,
    DEFAULT_ORIENTATION_EDGE_CAP,
};
use mdgm::model::{log_dgm_prior, LatentField, NoiseParams, Observations};
use mdgm::rng::{stream, ChainRng};
use mdgm::samplers::{cftp_ising, run_chain, Init, McmcConfig, Model};
use num_traits::ToPrimitive;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

// Tolerances and budgets.
const C1_MAX_SECONDS: f64 = 1.0;
const C2_TOL: f64 = 1e-10;
const C2_MAX_SECONDS: f64 = 30.0;
const C3_INVALID_GAP: f64 = 1e-3;
const C3_VALID_TOL: f64 = 1e-12;
const C4_TOL: f64 = 1e-12;
const C5_DRAWS: usize = 1_000_000;
const C5_SIGNIFICANCE: f64 = 1e-3;
const C5_POSTERIOR_DRAWS: usize = 200_000;
const C5_TV: f64 = 0.01;
const C6_DRAWS: usize = 100_000;
const C6_TV: f64 = 0.02;
const C6_MAX_SECONDS: f64 = 120.0;
const C7_ITERATIONS: usize = 100_000;
const C7_MARGINAL_TOL: f64 = 0.01;
const C7_KS: f64 = 0.02;
const C9_ACCURACY_SPREAD: f64 = 0.05;
const C9_BETA_MAX: f64 = 0.5;
const C9_CFTP_CAP: u64 = 1 << 24;
const C9_MAX_SECONDS: f64 = 1800.0;
const C10_DRAWS: usize = 100_000;
const C10_TOL: f64 = 0.01;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn lattice(r: usize, c: usize, o: Neighborhood) -> Nug {
    Nug::lattice(LatticeSpec::new(r, c, o).unwrap())
}

fn cycle(n: usize) -> Nug {
    Nug::from_pairs(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
}

fn edge_list(g: &Nug) -> Vec<(usize, usize)> {
    g.edges().iter().map(|e| (e.lo, e.hi)).collect()
}

/// Spanning trees by checking every `(n-1)`-subset of edges for acyclicity.
fn brute_force_trees(g: &Nug) -> u64 {
    let edges = edge_list(g);
    let (n, m) = (g.n(), edges.len());
    (0u64..1 << m)
        .filter(|mask| mask.count_ones() as usize == n - 1)
        .filter(|mask| {
            let mut comp: Vec<usize> = (0..n).collect();
            for (k, &(a, b)) in edges.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    let (ca, cb) = (comp[a], comp[b]);
                    if ca == cb {
                        return false;
                    }
                    comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
                }
            }
            true
        })
        .count() as u64
}

/// Acyclic orientations by checking every orientation for a topological order.
fn brute_force_orientations(g: &Nug) -> u64 {
    let edges = edge_list(g);
    let (n, m) = (g.n(), edges.len());
    (0u64..1 << m)
        .filter(|mask| {
            let mut indeg = vec![0usize; n];
            let mut out = vec![Vec::new(); n];
            for (k, &(a, b)) in edges.iter().enumerate() {
                let (p, c) = if mask >> k & 1 == 1 { (a, b) } else { (b, a) };
                out[p].push(c);
                indeg[c] += 1;
            }
            let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
            let mut seen = 0;
            while let Some(v) = ready.pop() {
                seen += 1;
                for &c in &out[v] {
                    indeg[c] -= 1;
                    if indeg[c] == 0 {
                        ready.push(c);
                    }
                }
            }
            seen == n
        })
        .count() as u64
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let grid = lattice(3, 3, Neighborhood::First);
    let c4 = cycle(4);
    let tri = cycle(3);
    let st_grid = count_spanning_trees(&grid).unwrap().to_u64().unwrap();
    let st_c4 = count_spanning_trees(&c4).unwrap().to_u64().unwrap();
    let ao_c4 = count_acyclic_orientations(&c4, DEFAULT_ORIENTATION_EDGE_CAP).unwrap().to_u64().unwrap();
    let ao_tri = count_acyclic_orientations(&tri, DEFAULT_ORIENTATION_EDGE_CAP).unwrap().to_u64().unwrap();
    let brute = (
        brute_force_trees(&grid),
        brute_force_trees(&c4),
        brute_force_orientations(&c4),
        brute_force_orientations(&tri),
    );
    let secs = start.elapsed().as_secs_f64();
    let got = (st_grid, st_c4, ao_c4, ao_tri);
    outcome(
        got == (192, 4, 14, 6) && brute == got && secs < C1_MAX_SECONDS,
        format!("counts {got:?}, brute force {brute:?}, {secs:.3}s"),
    )
}

/// A connected random graph: a random tree plus extra edges.
fn random_graph(n: usize, extra: f64, rng: &mut ChainRng) -> Nug {
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.random_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(extra) && !pairs.contains(&(a, b)) {
                pairs.push((a, b));
            }
        }
    }
    Nug::from_pairs(n, pairs).unwrap()
}

fn random_dag(g: &Nug, class: DagClass, rng: &mut ChainRng) -> Dag {
    match class {
        DagClass::SpanningTree => uniform_spanning_tree(g, rng).unwrap(),
        DagClass::Rooted => rooted_dag(g, rng.random_range(0..g.n())).unwrap(),
        DagClass::AcyclicOrientation => {
            acyclic_orientation(g, &Permutation::random(g.n(), rng)).unwrap()
        }
        DagClass::General => unreachable!(),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = stream(2, &[]);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for class in [DagClass::SpanningTree, DagClass::Rooted, DagClass::AcyclicOrientation] {
        for _ in 0..20 {
            let n = rng.random_range(2..=10);
            let g = random_graph(n, 0.3, &mut rng);
            let dag = random_dag(&g, class, &mut rng);
            for beta in [0.0, 0.3, 1.0] {
                let total: f64 = (0..1u64 << n)
                    .map(|k| log_dgm_prior(&LatentField::from_index(n, k), &dag, beta).unwrap().exp())
                    .sum();
                worst = worst.max((total - 1.0).abs());
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < C2_TOL && secs < C2_MAX_SECONDS,
        format!("{checked} (DAG, beta) pairs, max |sum - 1| = {worst:.2e}, {secs:.2}s"),
    )
}

fn criterion_3() -> Outcome {
    let g = lattice(2, 2, Neighborhood::First);
    let y = Observations::empty(4);
    let eta = NoiseParams::new(0.2, 0.8).unwrap();
    let at = |beta| {
        exact_posterior_oracle(&y, &g, beta, &eta, Model::Amrf).unwrap().pseudo_likelihood_total
    };
    let (g3, g0) = (at(0.3), at(0.0));
    outcome(
        (g3 - 1.0).abs() > C3_INVALID_GAP && (g0 - 1.0).abs() < C3_VALID_TOL,
        format!("sum g(z|0.3) = {g3:.6}, sum g(z|0) = {g0:.15}"),
    )
}

/// The tree with the same skeleton as `tree`, oriented away from `root`.
fn reroot(tree: &Dag, root: usize) -> Dag {
    let n = tree.n();
    let mut adj = vec![Vec::new(); n];
    for (a, b) in tree.skeleton_edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut arcs = Vec::new();
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
    Dag::from_arcs(n, arcs, DagClass::SpanningTree, Some(root)).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = stream(4, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=16);
        let g = random_graph(n, 0.25, &mut rng);
        let tree = uniform_spanning_tree(&g, &mut rng).unwrap();
        let z = LatentField::from_fn(n, |_| rng.random_range(0..2));
        let beta = rng.random_range(0.0..2.0);
        let base = log_dgm_prior(&z, &tree, beta).unwrap();
        for r in 0..n {
            let other = log_dgm_prior(&z, &reroot(&tree, r), beta).unwrap();
            worst = worst.max((other - base).abs());
        }
    }
    outcome(worst < C4_TOL, format!("50 skeletons, max log-prior spread over roots {worst:.2e}"))
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

fn criterion_5() -> Outcome {
    let g = lattice(3, 3, Neighborhood::First);
    let mut rng = stream(5, &[]);
    let mut counts: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    for _ in 0..C5_DRAWS {
        *counts.entry(uniform_spanning_tree(&g, &mut rng).unwrap().skeleton_edges()).or_default() += 1;
    }
    let expected = C5_DRAWS as f64 / 192.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum::<f64>()
        + (192 - counts.len()) as f64 * expected;
    let p_value = 1.0 - ChiSquared::new(191.0).unwrap().cdf(chi2);
    let uniform_ok = counts.len() == 192 && p_value > C5_SIGNIFICANCE;

    let c4 = cycle(4);
    let trees = enumerate_spanning_trees(&c4);
    let z = LatentField::from_bitstring("1101").unwrap();
    let mut worst: f64 = 0.0;
    for beta in [0.0, 0.5] {
        let weights: Vec<f64> =
            trees.iter().map(|d| log_dgm_prior(&z, d, beta).unwrap().exp()).collect();
        let total: f64 = weights.iter().sum();
        let exact: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let index: HashMap<_, _> =
            trees.iter().enumerate().map(|(k, d)| (d.skeleton_edges(), k)).collect();
        let mut freq = vec![0.0; trees.len()];
        for _ in 0..C5_POSTERIOR_DRAWS {
            let d = posterior_spanning_tree(&c4, &z, beta, &mut rng).unwrap();
            freq[index[&d.skeleton_edges()]] += 1.0 / C5_POSTERIOR_DRAWS as f64;
        }
        worst = worst.max(tv(&exact, &freq));
    }
    outcome(
        uniform_ok && worst < C5_TV,
        format!(
            "uniform: {} skeletons seen, chi2 = {chi2:.1} (p = {p_value:.3}); posterior max TV = {worst:.4}",
            counts.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let g = lattice(2, 3, Neighborhood::First);
    let beta = 0.3;
    // 2^6 states; T by direct edge scan
    let t = |k: usize| g.edges().iter().filter(|e| (k >> e.lo & 1) == (k >> e.hi & 1)).count();
    let w: Vec<f64> = (0..64).map(|k| (beta * t(k) as f64).exp()).collect();
    let total: f64 = w.iter().sum();
    let exact: Vec<f64> = w.iter().map(|x| x / total).collect();
    let mut rng = stream(6, &[]);
    let mut freq = vec![0.0; 64];
    for _ in 0..C6_DRAWS {
        let z = cftp_ising(&g, beta, 1 << 20, &mut rng).unwrap();
        let k: usize = z.values().iter().enumerate().map(|(i, &v)| (v as usize) << i).sum();
        freq[k] += 1.0 / C6_DRAWS as f64;
    }
    let d = tv(&exact, &freq);
    let secs = start.elapsed().as_secs_f64();
    outcome(d < C6_TV && secs < C6_MAX_SECONDS, format!("TV = {d:.4}, {secs:.2}s"))
}

fn criterion_7() -> Outcome {
    let g = lattice(2, 2, Neighborhood::First);
    let y = Observations::new(vec![vec![1, 1], vec![1], vec![0, 1], vec![]]).unwrap();
    let eta = NoiseParams::new(0.2, 0.8).unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for model in [Model::MdgmSt, Model::ExactMrf] {
        let oracle = beta_posterior_grid(&y, &g, &eta, model, 1.0, 2001).unwrap();
        let mut config = McmcConfig::new(model, C7_ITERATIONS + 1000, 1000, 7);
        config.update_eta = false;
        config.beta_proposal_sd = 0.5;
        config.init = Init::Fixed { beta: 0.5, eta0: 0.2, eta1: 0.8, z: None };
        let samples = run_chain(&y, &g, &config).unwrap();
        let marginals = samples.posterior_mean_z();
        let max_err = marginals
            .iter()
            .zip(&oracle.marginals)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let betas: Vec<f64> = samples.records.iter().map(|r| r.beta).collect();
        let ks = oracle.ks_distance(&betas);
        pass &= max_err < C7_MARGINAL_TOL && ks < C7_KS;
        lines.push(format!("{model}: max marginal error {max_err:.4}, beta KS {ks:.4}"));
    }
    outcome(pass, lines.join("; "))
}

fn criterion_8() -> Outcome {
    let mut checked = 0;
    let mut pass = true;
    for size in [3, 4] {
        let g = lattice(size, size, Neighborhood::Second);
        for r in 0..g.n() {
            let dag = rooted_dag(&g, r).unwrap();
            for i in 0..g.n() {
                let mut expected = g.neighbors(i).to_vec();
                expected.sort_unstable();
                pass &= dag.markov_blanket(i) == expected;
                checked += 1;
            }
        }
    }
    outcome(pass, format!("{checked} (root, vertex) pairs checked"))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    // Exact-MRF chains need a perfect draw at every proposed beta, which
    // does not coalesce in practice deep in the ordered phase; the prior
    // support stops at C9_BETA_MAX for every model.
    let mut mcmc = McmcConfig::new(Model::MdgmSt, 2000, 1000, 0);
    mcmc.priors.beta_max = C9_BETA_MAX;
    mcmc.cftp_step_cap = C9_CFTP_CAP;
    let cell = |eta: f64| SimConfig {
        lattice: LatticeSpec::new(8, 8, Neighborhood::Second).unwrap(),
        beta_true: 0.3,
        eta,
        obs_scheme: ObsScheme::FixedM(2),
        replications: 20,
        mcmc: mcmc.clone(),
        models: Model::ALL.to_vec(),
        init_at_truth: true,
    };
    let rows = match run_simulation_study(&[cell(0.2), cell(0.05)], 9) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("study failed: {e}")),
    };
    let mut csv = Vec::new();
    write_study_csv(&rows, true, &mut csv).unwrap();
    print!("{}", String::from_utf8_lossy(&csv));
    let failures: usize = rows.iter().map(|r| r.failures.len()).sum();
    let first_failure = rows
        .iter()
        .find_map(|r| r.failures.first().map(|(rep, e)| format!("; first failure: {} rep {rep}: {e}", r.model)))
        .unwrap_or_default();
    let find = |setting: usize, model: Model| {
        rows.iter().find(|r| r.setting_id == setting && r.model == model).unwrap()
    };
    let rmse = |m| find(0, m).rmse.unwrap();
    let (exact, st, amrf) = (rmse(Model::ExactMrf), rmse(Model::MdgmSt), rmse(Model::Amrf));
    let ordered = exact.point <= st.point && st.point <= amrf.point;
    // strict ordering fails only when the intervals separate the other way
    let contradicted = (exact.lo > st.hi) || (st.lo > amrf.hi);
    let accs: Vec<f64> = Model::ALL.iter().map(|&m| find(1, m).accuracy.unwrap().point).collect();
    let spread = accs.iter().cloned().fold(f64::MIN, f64::max) - accs.iter().cloned().fold(f64::MAX, f64::min);
    let secs = start.elapsed().as_secs_f64();
    let flag = if ordered { "" } else if contradicted { " (ordering contradicted)" } else { " (ordering not strict; CIs overlap, flagged)" };
    outcome(
        failures == 0 && !contradicted && spread < C9_ACCURACY_SPREAD && secs < C9_MAX_SECONDS,
        format!(
            "rmse_T exact-mrf {:.3} <= mdgm-st {:.3} <= amrf {:.3}{flag}; accuracy spread at eta=0.05 {spread:.4}; {failures} failed replications{first_failure}; {secs:.0}s",
            exact.point, st.point, amrf.point
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = stream(10, &[]);
    let mut parts = Vec::new();
    let mut pass = true;
    for (lambda, target) in [(1.39, 0.25), (2.3, 0.10)] {
        let pois = Poisson::new(lambda).unwrap();
        let zeros = (0..C10_DRAWS).filter(|_| pois.sample(&mut rng) == 0.0).count();
        let rate = zeros as f64 / C10_DRAWS as f64;
        pass &= (rate - target).abs() < C10_TOL;
        parts.push(format!("lambda {lambda}: zero rate {rate:.4} (target {target})"));
    }
    // the data generator uses the same scheme
    let g = lattice(10, 10, Neighborhood::First);
    let mut empty = 0;
    for _ in 0..100 {
        let (_, y) = mdgm::experiments::generate_on(&g, 0.1, (0.2, 0.8), ObsScheme::Poisson(2.3), 1 << 20, &mut rng)
            .unwrap();
        empty += (0..100).filter(|&i| y.m(i) == 0).count();
    }
    let rate = empty as f64 / 10_000.0;
    pass &= (rate - 0.10).abs() < 0.015;
    parts.push(format!("generated data zero rate {rate:.4}"));
    outcome(pass, parts.join("; "))
}

/// A 615-unit irregular adjacency: a 15 x 41 second-order lattice with a
/// fifth of its edges dropped, keeping connectivity.
fn synthetic_adjacency(rng: &mut ChainRng) -> String {
    let full = lattice(15, 41, Neighborhood::Second);
    let mut kept: Vec<(usize, usize)> = edge_list(&full);
    let tree = uniform_spanning_tree(&full, rng).unwrap().skeleton_edges();
    kept.retain(|e| tree.contains(e) || rng.random_bool(0.8));
    let mut text = String::from("# synthetic adjacency\n");
    for (a, b) in kept {
        text.push_str(&format!("{a},{b}\n"));
    }
    text
}

fn criterion_11() -> Outcome {
    let mut rng = stream(11, &[]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("adjacency.txt");
    std::fs::write(&path, synthetic_adjacency(&mut rng)).unwrap();
    let g = Nug::load_edge_list(&path, None).unwrap();
    let n = g.n();
    let z = cftp_ising(&g, 0.2, 1 << 24, &mut rng).unwrap();
    let rated: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.8)).collect();
    let mut y = vec![Vec::new(); n];
    for _ in 0..9469 {
        let i = rated[rng.random_range(0..rated.len())];
        let rate = if z.get(i) == 1 { 0.75 } else { 0.3 };
        y[i].push(rng.random_bool(rate) as u8);
    }
    let y = Observations::new(y).unwrap();
    let config = McmcConfig::new(Model::MdgmSt, 400, 200, 0);
    let models = [Model::MdgmSt, Model::Amrf];
    let run = || cross_validate(&y, &g, 60, 3, &config, &models, 11).unwrap();
    let (a, b) = (run(), run());
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let format_ok = csv.lines().next() == Some(CV_CSV_HEADER)
        && csv.lines().skip(1).all(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f.len() == 3 && f[0].parse::<usize>().is_ok() && f[1].parse::<Model>().is_ok() && f[2].parse::<f64>().is_ok()
        });
    let in_range = a.rows.iter().all(|r| r.mae > 0.0 && r.mae < 1.0);
    let means: Vec<String> = a.mean_mae().iter().map(|(m, v)| format!("{m} {v:.4}")).collect();
    outcome(
        n == 615 && y.total() == 9469 && format_ok && in_range && a == b,
        format!(
            "{n} units, {} ratings, deterministic: {}, mean MAE {}; no real ratings bundled, published values not reproduced",
            y.total(),
            a == b,
            means.join(", ")
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags; honor a name filter if given.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "spanning-tree and acyclic-orientation counts", criterion_1),
        (2, "DGM prior normalization", criterion_2),
        (3, "pseudo-likelihood is not normalized", criterion_3),
        (4, "spanning-tree prior invariant to the root", criterion_4),
        (5, "Wilson sampler distributions", criterion_5),
        (6, "CFTP exactness", criterion_6),
        (7, "end-to-end posterior against enumeration", criterion_7),
        (8, "rooted DAG Markov blankets", criterion_8),
        (9, "desk-scale simulation trends", criterion_9),
        (10, "missingness calibration", criterion_10),
        (11, "cross-validation on synthetic data", criterion_11),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let label = format!("criterion_{id}");
        if filter.as_ref().is_some_and(|f| !label.contains(f.as_str()) && !name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().unwrap();
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
