//! Flag definitions. Each command's options double as its JSON config
//! schema: keys are the long flag names, and flags win over the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "mdgm", version, about = "Bayesian inference for latent binary spatial fields")]
pub struct Cli {
    /// Worker threads for replications and folds.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the replicated simulation study on a regular lattice.
    Simulate(Simulate),
    /// Fit one model to ratings and write posterior draws.
    Fit(Fit),
    /// Hold-out cross-validation of one or more models.
    Crossval(Crossval),
    /// Count spanning trees or acyclic orientations of a graph.
    Count(Count),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Simulate {
    /// JSON file with defaults for any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// first or second.
    #[arg(long)]
    pub order: Option<String>,
    /// True beta values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub beta_grid: Option<Vec<f64>>,
    /// Noise levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    /// fixed:M or poisson:LAMBDA, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub obs: Option<Vec<String>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub beta_sd: Option<f64>,
    /// Upper end of the uniform prior on beta.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Site-update budget for each perfect draw.
    #[arg(long)]
    pub cftp_cap: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record chain wall time in the study table.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub timing: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Fit {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Edge list of unit IDs, one pair per line.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub order: Option<String>,
    /// CSV with header unit_id,value.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub beta_sd: Option<f64>,
    /// Upper end of the uniform prior on beta.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Site-update budget for each perfect draw.
    #[arg(long)]
    pub cftp_cap: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Crossval {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Rated units withheld per iteration.
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Cross-validation iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub beta_sd: Option<f64>,
    /// Upper end of the uniform prior on beta.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Site-update budget for each perfect draw.
    #[arg(long)]
    pub cftp_cap: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Count {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub order: Option<String>,
    /// trees or orientations.
    #[arg(long)]
    pub what: Option<String>,
    /// Largest edge count for orientation counting.
    #[arg(long)]
    pub edge_cap: Option<usize>,
}

/// The file's values, the flags' values, and their merge.
pub struct Resolved<T> {
    pub file: Value,
    pub flags: Value,
    pub merged: T,
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

/// Overlays the flags on the config file named by `config`, if any.
pub fn resolve<T>(config: Option<&Path>, flags: &T) -> Result<Resolved<T>, CliError>
where
    T: Serialize + DeserializeOwned,
{
    let file: Map<String, Value> = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Runtime(anyhow::anyhow!("cannot read config {}: {e}", path.display()))
            })?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            if !value.is_object() {
                return Err(CliError::Usage(format!("config {} must be a JSON object", path.display())));
            }
            // reject unknown keys and ill-typed values up front
            serde_json::from_value::<T>(value.clone())
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            object(value)
        }
        None => Map::new(),
    };
    let flag_map = object(serde_json::to_value(flags).expect("serializable flags"));
    let mut merged = file.clone();
    merged.extend(flag_map.clone());
    let merged: T = serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Resolved { file: Value::Object(file), flags: Value::Object(flag_map), merged })
}
