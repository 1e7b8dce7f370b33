use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use mdgm::experiments::{cross_validate, run_simulation_study, write_study_csv, ObsScheme, SimConfig};
use mdgm::graph::{count_acyclic_orientations, count_spanning_trees, DEFAULT_ORIENTATION_EDGE_CAP};
use mdgm::samplers::{run_chain, McmcConfig, Model, DEFAULT_CFTP_SITE_CAP};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{resolve, Count, Crossval, Fit, Resolved, Simulate};
use crate::io::{lattice_spec, load_graph, read_ratings};
use crate::CliError;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_models(names: &[String]) -> Result<Vec<Model>, CliError> {
    if names.is_empty() {
        return Err(usage("at least one model is required"));
    }
    names.iter().map(|s| s.parse::<Model>().map_err(|e| usage(e.to_string()))).collect()
}

struct ChainOptions {
    iters: usize,
    burnin: usize,
    beta_sd: Option<f64>,
    beta_max: Option<f64>,
    cftp_cap: Option<u64>,
    seed: u64,
}

impl ChainOptions {
    fn config(&self, model: Model) -> Result<McmcConfig, CliError> {
        let mut c = McmcConfig::new(model, self.iters, self.burnin, self.seed);
        if let Some(sd) = self.beta_sd {
            c.beta_proposal_sd = sd;
        }
        if let Some(m) = self.beta_max {
            c.priors.beta_max = m;
        }
        c.cftp_step_cap = self.cftp_cap.unwrap_or(DEFAULT_CFTP_SITE_CAP);
        c.validate().map_err(|e| usage(e.to_string()))?;
        Ok(c)
    }
}

fn create_out(out: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Everything needed to rerun the command.
fn write_manifest<T: Serialize>(
    dir: &Path,
    command: &str,
    config: Option<&Path>,
    resolved: &Resolved<T>,
    effective: Value,
    threads: usize,
) -> Result<(), CliError> {
    let manifest = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_file": config.map(|p| p.display().to_string()),
        "config_values": resolved.file,
        "flag_values": resolved.flags,
        "resolved": effective,
        "threads": threads,
    });
    let mut w = create(&dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(anyhow::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn simulate(flags: Simulate, threads: usize) -> Result<(), CliError> {
    let resolved = resolve(flags.config.as_deref(), &flags)?;
    let a = &resolved.merged;
    let spec = lattice_spec(a.rows.unwrap_or(16), a.cols.unwrap_or(16), Some(a.order.as_deref().unwrap_or("second")))?;
    let betas = a.beta_grid.clone().unwrap_or_else(|| vec![0.1, 0.15, 0.2, 0.25, 0.3]);
    let etas = a.eta.clone().unwrap_or_else(|| vec![0.05, 0.2]);
    let obs_names = a.obs.clone().unwrap_or_else(|| vec!["fixed:2".into()]);
    let obs: Vec<ObsScheme> = obs_names
        .iter()
        .map(|s| s.parse().map_err(|e: mdgm::Error| usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    let models = match &a.models {
        Some(m) => parse_models(m)?,
        None => Model::ALL.to_vec(),
    };
    let reps = a.reps.unwrap_or(100);
    let seed = a.seed.unwrap_or(0);
    let chain = ChainOptions {
        iters: a.iters.unwrap_or(2000),
        burnin: a.burnin.unwrap_or(1000),
        beta_sd: a.beta_sd,
        beta_max: a.beta_max,
        cftp_cap: a.cftp_cap,
        seed,
    };
    let mcmc = chain.config(models[0])?;
    if betas.is_empty() || etas.is_empty() || obs.is_empty() {
        return Err(usage("beta grid, eta and observation scheme lists must be non-empty"));
    }
    let mut grid = Vec::new();
    for &beta_true in &betas {
        for &eta in &etas {
            for &obs_scheme in &obs {
                let cell = SimConfig {
                    lattice: spec,
                    beta_true,
                    eta,
                    obs_scheme,
                    replications: reps,
                    mcmc: mcmc.clone(),
                    models: models.clone(),
                    init_at_truth: true,
                };
                cell.validate().map_err(|e| usage(e.to_string()))?;
                if eta <= 0.0 {
                    return Err(usage("eta must be positive for model fitting"));
                }
                if beta_true > mcmc.priors.beta_max {
                    return Err(usage(format!(
                        "true beta {beta_true} exceeds the prior bound {}",
                        mcmc.priors.beta_max
                    )));
                }
                grid.push(cell);
            }
        }
    }
    let timing = a.timing.unwrap_or(false);
    let dir = create_out(&a.out)?;
    let rows = run_simulation_study(&grid, seed)?;
    let mut w = create(&dir.join("study.csv"))?;
    write_study_csv(&rows, timing, &mut w)?;
    w.flush()?;
    for row in &rows {
        for (rep, msg) in &row.failures {
            eprintln!("setting {} {} replication {rep} failed: {msg}", row.setting_id, row.model);
        }
    }
    let effective = json!({
        "rows": spec.rows(), "cols": spec.cols(), "order": spec.order().to_string(),
        "beta-grid": betas, "eta": etas, "obs": obs_names, "reps": reps,
        "models": models, "iters": chain.iters, "burnin": chain.burnin,
        "beta-sd": mcmc.beta_proposal_sd, "beta-max": mcmc.priors.beta_max,
        "cftp-cap": mcmc.cftp_step_cap, "seed": seed, "timing": timing,
    });
    write_manifest(&dir, "simulate", flags.config.as_deref(), &resolved, effective, threads)
}

pub fn fit(flags: Fit, threads: usize) -> Result<(), CliError> {
    let resolved = resolve(flags.config.as_deref(), &flags)?;
    let a = &resolved.merged;
    let data = a.data.clone().ok_or_else(|| usage("--data is required"))?;
    let model: Model =
        a.model.as_deref().unwrap_or("mdgm-st").parse().map_err(|e: mdgm::Error| usage(e.to_string()))?;
    let chain = ChainOptions {
        iters: a.iters.unwrap_or(5000),
        burnin: a.burnin.unwrap_or(1000),
        beta_sd: a.beta_sd,
        beta_max: a.beta_max,
        cftp_cap: a.cftp_cap,
        seed: a.seed.unwrap_or(0),
    };
    let config = chain.config(model)?;
    let (nug, ids) = load_graph(a.graph.as_deref(), a.rows, a.cols, a.order.as_deref())?;
    let y = read_ratings(&data, &ids)?;
    let dir = create_out(&a.out)?;
    let samples = run_chain(&y, &nug, &config)?;

    let mut w = create(&dir.join("samples.jsonl"))?;
    samples.write_jsonl(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("posterior_mean_z.csv"))?;
    writeln!(w, "unit_id,posterior_mean_z")?;
    for (i, p) in samples.posterior_mean_z().iter().enumerate() {
        writeln!(w, "{},{p}", ids.id(i))?;
    }
    w.flush()?;
    let acc = &samples.acceptance;
    let summary = json!({
        "model": model,
        "records": samples.len(),
        "dag_proposed": acc.dag_proposed,
        "dag_accepted": acc.dag_accepted,
        "dag_acceptance_rate": acc.dag_rate(),
        "beta_proposed": acc.beta_proposed,
        "beta_accepted": acc.beta_accepted,
        "beta_acceptance_rate": acc.beta_rate(),
        "eta_stalls": acc.eta_stalls,
    });
    let mut w = create(&dir.join("acceptance.json"))?;
    serde_json::to_writer_pretty(&mut w, &summary).map_err(anyhow::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    ids.write_csv(&dir.join("id_map.csv"))?;
    println!("{summary}");
    let effective = json!({
        "graph": a.graph, "rows": a.rows, "cols": a.cols, "order": a.order,
        "data": data, "model": model, "iters": chain.iters, "burnin": chain.burnin,
        "beta-sd": config.beta_proposal_sd, "beta-max": config.priors.beta_max,
        "cftp-cap": config.cftp_step_cap, "seed": chain.seed,
    });
    write_manifest(&dir, "fit", flags.config.as_deref(), &resolved, effective, threads)
}

pub fn crossval(flags: Crossval, threads: usize) -> Result<(), CliError> {
    let resolved = resolve(flags.config.as_deref(), &flags)?;
    let a = &resolved.merged;
    let data = a.data.clone().ok_or_else(|| usage("--data is required"))?;
    let models = match &a.models {
        Some(m) => parse_models(m)?,
        None => vec![Model::MdgmSt, Model::Amrf],
    };
    let holdout = a.holdout.unwrap_or(60);
    let iterations = a.iterations.unwrap_or(100);
    if iterations == 0 {
        return Err(usage("--iterations must be at least 1"));
    }
    let chain = ChainOptions {
        iters: a.iters.unwrap_or(5000),
        burnin: a.burnin.unwrap_or(1000),
        beta_sd: a.beta_sd,
        beta_max: a.beta_max,
        cftp_cap: a.cftp_cap,
        seed: a.seed.unwrap_or(0),
    };
    let config = chain.config(models[0])?;
    let (nug, ids) = load_graph(a.graph.as_deref(), a.rows, a.cols, a.order.as_deref())?;
    let y = read_ratings(&data, &ids)?;
    let dir = create_out(&a.out)?;
    let result = cross_validate(&y, &nug, holdout, iterations, &config, &models, chain.seed)?;
    let mut w = create(&dir.join("crossval.csv"))?;
    result.write_csv(&mut w)?;
    w.flush()?;
    ids.write_csv(&dir.join("id_map.csv"))?;
    for (m, mae) in result.mean_mae() {
        println!("{m}\t{mae}");
    }
    let effective = json!({
        "graph": a.graph, "rows": a.rows, "cols": a.cols, "order": a.order,
        "data": data, "models": models, "holdout": holdout, "iterations": iterations,
        "iters": chain.iters, "burnin": chain.burnin,
        "beta-sd": config.beta_proposal_sd, "beta-max": config.priors.beta_max,
        "cftp-cap": config.cftp_step_cap, "seed": chain.seed,
    });
    write_manifest(&dir, "crossval", flags.config.as_deref(), &resolved, effective, threads)
}

pub fn count(flags: Count) -> Result<(), CliError> {
    let resolved = resolve(flags.config.as_deref(), &flags)?;
    let a = &resolved.merged;
    let what = a.what.as_deref().ok_or_else(|| usage("--what trees|orientations is required"))?;
    let (nug, _) = load_graph(a.graph.as_deref(), a.rows, a.cols, a.order.as_deref())?;
    let value = match what {
        "trees" => count_spanning_trees(&nug)?,
        "orientations" => {
            count_acyclic_orientations(&nug, a.edge_cap.unwrap_or(DEFAULT_ORIENTATION_EDGE_CAP))?
        }
        other => return Err(usage(format!("--what must be trees or orientations, got '{other}'"))),
    };
    println!("{value}");
    Ok(())
}
