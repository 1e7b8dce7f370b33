//! Unit IDs, graph files and rating files.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use mdgm::graph::{LatticeSpec, Neighborhood, Nug};
use mdgm::model::Observations;

use crate::CliError;

/// Bijection between external unit IDs and dense indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    /// Orders IDs numerically when all are non-negative integers, and
    /// lexicographically otherwise.
    pub fn from_ids(ids: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = ids.into_iter().collect();
        let mut ids: Vec<String> = set.into_iter().collect();
        if ids.iter().all(|s| s.parse::<u64>().is_ok()) {
            ids.sort_by_key(|s| s.parse::<u64>().unwrap());
        }
        let index = ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        IdMap { ids, index }
    }

    pub fn sequential(n: usize) -> Self {
        Self::from_ids((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn write_csv(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["unit_id", "index"])?;
        for (i, id) in self.ids.iter().enumerate() {
            w.write_record([id.as_str(), &i.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Edge list of unit IDs: two IDs per line, separated by whitespace or a
/// comma. `#` starts a comment.
pub fn read_graph_file(path: &Path) -> anyhow::Result<(Nug, IdMap)> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot read graph {}", path.display()))?;
    let mut pairs = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> =
            body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if tokens.len() != 2 {
            bail!("{}:{}: expected two unit IDs, got '{body}'", path.display(), k + 1);
        }
        pairs.push((tokens[0].to_string(), tokens[1].to_string()));
    }
    if pairs.is_empty() {
        bail!("{}: no edges", path.display());
    }
    let ids = IdMap::from_ids(pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]));
    let nug = Nug::from_pairs(
        ids.len(),
        pairs.iter().map(|(a, b)| (ids.index(a).unwrap(), ids.index(b).unwrap())),
    )
    .with_context(|| format!("invalid graph {}", path.display()))?;
    Ok((nug, ids))
}

/// The graph from `--graph`, or a lattice from `--rows/--cols/--order`.
pub fn load_graph(
    graph: Option<&Path>,
    rows: Option<usize>,
    cols: Option<usize>,
    order: Option<&str>,
) -> Result<(Nug, IdMap), CliError> {
    match (graph, rows, cols) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            Err(CliError::Usage("give either --graph or --rows/--cols, not both".into()))
        }
        (Some(path), None, None) => read_graph_file(path).map_err(CliError::Runtime),
        (None, Some(r), Some(c)) => {
            let spec = lattice_spec(r, c, order)?;
            Ok((Nug::lattice(spec), IdMap::sequential(spec.size())))
        }
        _ => Err(CliError::Usage("a graph is required: --graph FILE or --rows R --cols C".into())),
    }
}

pub fn lattice_spec(rows: usize, cols: usize, order: Option<&str>) -> Result<LatticeSpec, CliError> {
    let order: Neighborhood = order
        .unwrap_or("first")
        .parse()
        .map_err(|e: mdgm::Error| CliError::Usage(e.to_string()))?;
    LatticeSpec::new(rows, cols, order).map_err(|e| CliError::Usage(e.to_string()))
}

/// Ratings CSV with header `unit_id,value`; values are 0 or 1 and a unit
/// may appear any number of times. Every ID must be a graph unit.
pub fn read_ratings(path: &Path, ids: &IdMap) -> anyhow::Result<Observations> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read data {}", path.display()))?;
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["unit_id", "value"] {
        bail!("{}: header must be unit_id,value", path.display());
    }
    let mut pairs = Vec::new();
    let mut unknown = BTreeSet::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = k + 2;
        let id = record.get(0).unwrap_or("");
        let value: u8 = match record.get(1) {
            Some("0") => 0,
            Some("1") => 1,
            other => bail!("{}:{line}: rating must be 0 or 1, got {:?}", path.display(), other.unwrap_or("")),
        };
        match ids.index(id) {
            Some(i) => pairs.push((i, value)),
            None => {
                unknown.insert(id.to_string());
            }
        }
    }
    if !unknown.is_empty() {
        let shown: Vec<_> = unknown.iter().take(10).cloned().collect();
        return Err(anyhow!(
            "{}: {} unit ID(s) not in the graph: {}{}",
            path.display(),
            unknown.len(),
            shown.join(", "),
            if unknown.len() > 10 { ", ..." } else { "" }
        ));
    }
    Ok(Observations::from_pairs(ids.len(), pairs)?)
}
