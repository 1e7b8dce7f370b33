//! Natural undirected graphs (NUGs) over areal units.
//!
//! Vertices are dense 0-based indices. Every edge carries a contact weight:
//! 1 for units sharing a border, 2 for units touching only at a corner.

mod counting;

pub use counting::{count_acyclic_orientations, count_spanning_trees, DEFAULT_ORIENTATION_EDGE_CAP};

use std::collections::VecDeque;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contact weight between two areal units.
pub const BORDER: u8 = 1;
/// Contact weight between two areal units touching at a single point.
pub const CORNER: u8 = 2;

/// An undirected edge stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub lo: usize,
    pub hi: usize,
}

impl Edge {
    pub fn new(i: usize, j: usize) -> Self {
        if i < j {
            Edge { lo: i, hi: j }
        } else {
            Edge { lo: j, hi: i }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    First,
    Second,
}

impl FromStr for Neighborhood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "first" | "1" => Ok(Neighborhood::First),
            "second" | "2" => Ok(Neighborhood::Second),
            other => Err(Error::InvalidParameter(format!(
                "unknown neighborhood order '{other}' (expected first or second)"
            ))),
        }
    }
}

impl fmt::Display for Neighborhood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Neighborhood::First => f.write_str("first"),
            Neighborhood::Second => f.write_str("second"),
        }
    }
}

/// A rectangular lattice of areal units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    rows: usize,
    cols: usize,
    order: Neighborhood,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize, order: Neighborhood) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "lattice dimensions must be positive, got {rows}x{cols}"
            )));
        }
        Ok(LatticeSpec { rows, cols, order })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn order(&self) -> Neighborhood {
        self.order
    }

    pub fn size(&self) -> usize {
        self.rows * self.cols
    }
}

/// A natural undirected graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nug {
    n: usize,
    edges: Vec<Edge>,
    weights: Vec<u8>,
    neighbors: Vec<Vec<usize>>,
    neighbor_weights: Vec<Vec<u8>>,
}

impl Nug {
    /// Builds a graph from `(i, j, weight)` triples.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range vertices and weights
    /// other than 1 or 2. Line numbers in errors are the 1-based position of
    /// the offending triple.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u8)>,
    {
        let triples: Vec<_> = edges.into_iter().enumerate().map(|(k, e)| (k + 1, e)).collect();
        Self::from_numbered(n, triples)
    }

    /// Builds an unweighted (all weight 1) graph.
    pub fn from_pairs<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::new(n, pairs.into_iter().map(|(i, j)| (i, j, BORDER)))
    }

    fn from_numbered(n: usize, triples: Vec<(usize, (usize, usize, u8))>) -> Result<Self> {
        let mut adjacency: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(triples.len());
        let mut seen = std::collections::HashSet::with_capacity(triples.len());
        for (line, (i, j, w)) in triples {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { line, vertex: v, n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop { line, vertex: i });
            }
            if w != BORDER && w != CORNER {
                return Err(Error::Parse {
                    line,
                    message: format!("edge weight must be 1 or 2, got {w}"),
                });
            }
            let e = Edge::new(i, j);
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge { line, i: e.lo, j: e.hi });
            }
            edges.push((e, w));
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        edges.sort_unstable();
        let mut neighbors = Vec::with_capacity(n);
        let mut neighbor_weights = Vec::with_capacity(n);
        for mut adj in adjacency {
            adj.sort_unstable();
            neighbors.push(adj.iter().map(|&(v, _)| v).collect());
            neighbor_weights.push(adj.iter().map(|&(_, w)| w).collect());
        }
        Ok(Nug {
            n,
            weights: edges.iter().map(|&(_, w)| w).collect(),
            edges: edges.into_iter().map(|(e, _)| e).collect(),
            neighbors,
            neighbor_weights,
        })
    }

    /// Row-major lattice. Edge-adjacent cells get weight 1; with a second-order
    /// neighborhood, corner-adjacent cells are added with weight 2.
    pub fn lattice(spec: LatticeSpec) -> Self {
        let (rows, cols) = (spec.rows, spec.cols);
        let idx = |r: usize, c: usize| r * cols + c;
        let mut triples = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    triples.push((idx(r, c), idx(r, c + 1), BORDER));
                }
                if r + 1 < rows {
                    triples.push((idx(r, c), idx(r + 1, c), BORDER));
                }
                if spec.order == Neighborhood::Second && r + 1 < rows {
                    if c + 1 < cols {
                        triples.push((idx(r, c), idx(r + 1, c + 1), CORNER));
                    }
                    if c > 0 {
                        triples.push((idx(r, c), idx(r + 1, c - 1), CORNER));
                    }
                }
            }
        }
        Self::new(rows * cols, triples).expect("lattice construction is always valid")
    }

    /// Parses the `i,j[,w]` edge-list format. Blank lines and lines starting
    /// with `#` are skipped. When `n` is `None` the vertex count is one more
    /// than the largest index seen.
    pub fn parse_edge_list<R: BufRead>(reader: R, n: Option<usize>) -> Result<Self> {
        let mut triples = Vec::new();
        let mut max_vertex = None;
        for (k, line) in reader.lines().enumerate() {
            let line_no = k + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected 'i,j' or 'i,j,w', got '{trimmed}'"),
                });
            }
            let parse_index = |s: &str| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid vertex index '{s}'"),
                })
            };
            let i = parse_index(fields[0])?;
            let j = parse_index(fields[1])?;
            let w = match fields.get(2) {
                None => BORDER,
                Some(s) => s.parse::<u8>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid edge weight '{s}'"),
                })?,
            };
            max_vertex = Some(max_vertex.unwrap_or(0).max(i).max(j));
            triples.push((line_no, (i, j, w)));
        }
        let n = n.unwrap_or_else(|| max_vertex.map_or(0, |m| m + 1));
        Self::from_numbered(n, triples)
    }

    pub fn load_edge_list(path: impl AsRef<Path>, n: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse_edge_list(std::io::BufReader::new(file), n)
    }

    /// Writes the graph in the edge-list format, weights always explicit.
    pub fn write_edge_list<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for (e, w) in self.edges.iter().zip(&self.weights) {
            writeln!(out, "{},{},{}", e.lo, e.hi, w)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges paired with their contact weights.
    pub fn weighted_edges(&self) -> impl Iterator<Item = (Edge, u8)> + '_ {
        self.edges.iter().copied().zip(self.weights.iter().copied())
    }

    /// Sorted neighbor list of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Contact weights parallel to [`Nug::neighbors`].
    pub fn neighbor_weights(&self, i: usize) -> &[u8] {
        &self.neighbor_weights[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<u8> {
        if i >= self.n {
            return None;
        }
        self.neighbors[i]
            .binary_search(&j)
            .ok()
            .map(|k| self.neighbor_weights[i][k])
    }

    /// Unweighted association (adjacency) matrix.
    pub fn association_matrix(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.n]; self.n];
        for e in &self.edges {
            a[e.lo][e.hi] = 1;
            a[e.hi][e.lo] = 1;
        }
        a
    }

    /// Degree matrix minus the unweighted adjacency matrix.
    pub fn laplacian(&self) -> Vec<Vec<i64>> {
        let mut l = vec![vec![0i64; self.n]; self.n];
        for (i, row) in l.iter_mut().enumerate() {
            row[i] = self.degree(i) as i64;
        }
        for e in &self.edges {
            l[e.lo][e.hi] = -1;
            l[e.hi][e.lo] = -1;
        }
        l
    }

    /// Breadth-first reachability from vertex 0. The empty graph counts as
    /// connected.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &self.neighbors[v] {
                if !seen[u] {
                    seen[u] = true;
                    reached += 1;
                    queue.push_back(u);
                }
            }
        }
        reached == self.n
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }
}
