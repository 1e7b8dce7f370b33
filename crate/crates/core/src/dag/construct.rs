use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Dag, DagClass, Permutation};
use crate::error::{Error, Result};
use crate::graph::Nug;

/// Minimum contact-weighted path cost from `root` to every vertex.
pub fn shortest_path_labels(nug: &Nug, root: usize) -> Result<Vec<u64>> {
    let n = nug.n();
    if root >= n {
        return Err(Error::DimensionMismatch { expected: n, got: root + 1 });
    }
    let mut label = vec![u64::MAX; n];
    let mut heap = BinaryHeap::new();
    label[root] = 0;
    heap.push(Reverse((0u64, root)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > label[v] {
            continue;
        }
        for (&u, &w) in nug.neighbors(v).iter().zip(nug.neighbor_weights(v)) {
            let cand = d + u64::from(w);
            if cand < label[u] {
                label[u] = cand;
                heap.push(Reverse((cand, u)));
            }
        }
    }
    if label.contains(&u64::MAX) {
        return Err(Error::Disconnected);
    }
    Ok(label)
}

/// The unique rooted DAG for `root`: vertices are labelled by weighted
/// distance from the root, edges point from the lower label to the higher,
/// and edges between equal labels are dropped.
pub fn rooted_dag(nug: &Nug, root: usize) -> Result<Dag> {
    let label = shortest_path_labels(nug, root)?;
    let mut parents = vec![Vec::new(); nug.n()];
    for e in nug.edges() {
        let (a, b) = (e.lo, e.hi);
        match label[a].cmp(&label[b]) {
            std::cmp::Ordering::Less => parents[b].push(a),
            std::cmp::Ordering::Greater => parents[a].push(b),
            std::cmp::Ordering::Equal => {}
        }
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    Ok(Dag::from_parents(parents, DagClass::Rooted, Some(root)))
}

/// Orients every edge from the vertex appearing earlier in `perm`.
pub fn acyclic_orientation(nug: &Nug, perm: &Permutation) -> Result<Dag> {
    if perm.len() != nug.n() {
        return Err(Error::DimensionMismatch { expected: nug.n(), got: perm.len() });
    }
    let rank = perm.ranks();
    let mut parents = vec![Vec::new(); nug.n()];
    for e in nug.edges() {
        if rank[e.lo] < rank[e.hi] {
            parents[e.hi].push(e.lo);
        } else {
            parents[e.lo].push(e.hi);
        }
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    Ok(Dag::from_parents(parents, DagClass::AcyclicOrientation, None))
}
