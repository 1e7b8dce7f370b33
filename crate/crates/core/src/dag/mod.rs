//! Directed acyclic graphs compatible with a [`Nug`], and the three DAG
//! classes used as mixture components: spanning trees, rooted DAGs and
//! acyclic orientations.

mod construct;
mod wilson;

pub use construct::{acyclic_orientation, rooted_dag, shortest_path_labels};
pub use wilson::{posterior_spanning_tree, uniform_spanning_tree, weighted_spanning_tree};

use std::collections::VecDeque;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Nug;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DagClass {
    SpanningTree,
    Rooted,
    AcyclicOrientation,
    General,
}

impl fmt::Display for DagClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DagClass::SpanningTree => "spanning-tree",
            DagClass::Rooted => "rooted",
            DagClass::AcyclicOrientation => "acyclic-orientation",
            DagClass::General => "general",
        })
    }
}

impl FromStr for DagClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spanning-tree" => Ok(DagClass::SpanningTree),
            "rooted" => Ok(DagClass::Rooted),
            "acyclic-orientation" => Ok(DagClass::AcyclicOrientation),
            "general" => Ok(DagClass::General),
            other => Err(Error::InvalidParameter(format!("unknown DAG class '{other}'"))),
        }
    }
}

/// A directed acyclic graph stored as sorted parent and child lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    class: DagClass,
    root: Option<usize>,
}

impl Dag {
    /// Builds a DAG from `(parent, child)` arcs, validating acyclicity and
    /// the structural requirements of `class`.
    pub fn from_arcs<I>(n: usize, arcs: I, class: DagClass, root: Option<usize>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut parents = vec![Vec::new(); n];
        for (p, c) in arcs {
            let bad = if p >= n { p } else { c };
            if p >= n || c >= n {
                return Err(Error::DimensionMismatch { expected: n, got: bad + 1 });
            }
            if p == c {
                return Err(Error::InvalidParameter(format!("self-loop on vertex {p}")));
            }
            parents[c].push(p);
        }
        for ps in &mut parents {
            ps.sort_unstable();
            let before = ps.len();
            ps.dedup();
            if ps.len() != before {
                return Err(Error::InvalidParameter("duplicate arc".into()));
            }
        }
        let dag = Self::from_parents(parents, class, root);
        dag.validate()?;
        Ok(dag)
    }

    /// Unchecked constructor for internal builders. Parent lists must be
    /// sorted and duplicate-free.
    pub(crate) fn from_parents(
        parents: Vec<Vec<usize>>,
        class: DagClass,
        root: Option<usize>,
    ) -> Self {
        let mut children = vec![Vec::new(); parents.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        // children are pushed in increasing c, so already sorted
        Dag { parents, children, class, root }
    }

    fn validate(&self) -> Result<()> {
        if self.topological_order().is_none() {
            return Err(Error::InvalidParameter("arcs contain a directed cycle".into()));
        }
        let n = self.n();
        if let Some(r) = self.root {
            if r >= n {
                return Err(Error::DimensionMismatch { expected: n, got: r + 1 });
            }
        }
        let orphans = self.orphans();
        match self.class {
            DagClass::SpanningTree => {
                let r = self.root.ok_or_else(|| {
                    Error::InvalidParameter("spanning-tree DAG requires a root".into())
                })?;
                let ok = self.parents[r].is_empty()
                    && (0..n).all(|i| i == r || self.parents[i].len() == 1);
                if !ok {
                    return Err(Error::InvalidParameter(
                        "spanning-tree DAG needs one parent per non-root vertex".into(),
                    ));
                }
            }
            DagClass::Rooted => {
                if orphans.len() != 1 || self.root.is_some_and(|r| orphans[0] != r) {
                    return Err(Error::InvalidParameter(
                        "rooted DAG must have exactly one orphan, its root".into(),
                    ));
                }
            }
            DagClass::AcyclicOrientation | DagClass::General => {}
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn class(&self) -> DagClass {
        self.class
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// All `(parent, child)` arcs, ordered by child then parent.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
    }

    /// Vertices without parents.
    pub fn orphans(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.parents[i].is_empty()).collect()
    }

    /// Kahn's algorithm; `None` when a directed cycle exists.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Whether every arc of the DAG is an edge of `nug`.
    pub fn is_compatible(&self, nug: &Nug) -> Result<bool> {
        if self.n() != nug.n() {
            return Err(Error::DimensionMismatch { expected: nug.n(), got: self.n() });
        }
        Ok(self.arcs().all(|(p, c)| nug.has_edge(p, c)))
    }

    /// The undirected skeleton; all weights 1.
    pub fn skeleton(&self) -> Nug {
        Nug::from_pairs(self.n(), self.arcs()).expect("arcs of a DAG form a simple graph")
    }

    /// Skeleton edges as sorted `(lo, hi)` pairs; a cheap key for tallying
    /// tree draws.
    pub fn skeleton_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self.arcs().map(|(p, c)| (p.min(c), p.max(c))).collect();
        edges.sort_unstable();
        edges
    }

    /// Parents, children and co-parents of children of `i`, excluding `i`.
    pub fn markov_blanket(&self, i: usize) -> Vec<usize> {
        let mut blanket: Vec<usize> = self.parents[i]
            .iter()
            .chain(&self.children[i])
            .copied()
            .chain(self.children[i].iter().flat_map(|&c| self.parents[c].iter().copied()))
            .filter(|&v| v != i)
            .collect();
        blanket.sort_unstable();
        blanket.dedup();
        blanket
    }

    /// Writes `child,parent` lines under a `# root=<r> class=<tag>` header.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        match self.root {
            Some(r) => writeln!(out, "# root={r} class={}", self.class)?,
            None => writeln!(out, "# root=none class={}", self.class)?,
        }
        for (p, c) in self.arcs() {
            writeln!(out, "{c},{p}")?;
        }
        Ok(())
    }

    /// Parses the format written by [`Dag::write_csv`] for a DAG on `n`
    /// vertices.
    pub fn parse_csv<R: BufRead>(reader: R, n: usize) -> Result<Self> {
        let mut class = DagClass::General;
        let mut root = None;
        let mut arcs = Vec::new();
        for (k, line) in reader.lines().enumerate() {
            let line_no = k + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('#') {
                for field in header.split_whitespace() {
                    match field.split_once('=') {
                        Some(("root", "none")) => root = None,
                        Some(("root", r)) => {
                            root = Some(r.parse().map_err(|_| Error::Parse {
                                line: line_no,
                                message: format!("invalid root '{r}'"),
                            })?)
                        }
                        Some(("class", c)) => class = c.parse()?,
                        _ => {}
                    }
                }
                continue;
            }
            let parsed: Option<(usize, usize)> = trimmed
                .split_once(',')
                .and_then(|(c, p)| Some((c.trim().parse().ok()?, p.trim().parse().ok()?)));
            let (c, p) = parsed.ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected 'child,parent', got '{trimmed}'"),
            })?;
            arcs.push((p, c));
        }
        Self::from_arcs(n, arcs, class, root)
    }
}

/// A vertex ordering. Earlier vertices become parents under
/// [`acyclic_orientation`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidParameter(format!(
                    "{order:?} is not a permutation of 0..{n}"
                )));
            }
        }
        Ok(Permutation { order })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { order: (0..n).collect() }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Permutation { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `rank[v]` is the position of `v` in the ordering.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.order.len()];
        for (pos, &v) in self.order.iter().enumerate() {
            rank[v] = pos;
        }
        rank
    }
}
