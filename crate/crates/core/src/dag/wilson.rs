//! Spanning-tree draws by loop-erased random walk (Wilson's algorithm).
//!
//! With a symmetric edge weight `w`, a walk that steps to neighbor `j` with
//! probability proportional to `w(i, j)` produces trees with probability
//! proportional to the product of their edge weights, whatever the root.

use rand::Rng;

use super::{Dag, DagClass};
use crate::error::{Error, Result};
use crate::graph::Nug;
use crate::model::LatentField;

/// Uniform spanning tree, oriented away from a uniformly chosen root.
pub fn uniform_spanning_tree<R: Rng + ?Sized>(nug: &Nug, rng: &mut R) -> Result<Dag> {
    nug.require_connected()?;
    let root = rng.random_range(0..nug.n().max(1));
    Ok(wilson(nug, root, rng, |rng, _, nb| nb[rng.random_range(0..nb.len())]))
}

/// Spanning tree with probability proportional to the product of
/// `weight(i, j)` over its edges. `weight` must be symmetric and positive.
pub fn weighted_spanning_tree<R, W>(nug: &Nug, root: usize, weight: W, rng: &mut R) -> Result<Dag>
where
    R: Rng + ?Sized,
    W: Fn(usize, usize) -> f64,
{
    nug.require_connected()?;
    if root >= nug.n() {
        return Err(Error::DimensionMismatch { expected: nug.n(), got: root + 1 });
    }
    let mut buf = Vec::new();
    Ok(wilson(nug, root, rng, |rng, u, nb| {
        buf.clear();
        buf.extend(nb.iter().map(|&v| weight(u, v)));
        pick_weighted(rng, nb, &buf)
    }))
}

/// Draw from the full conditional of the tree skeleton given the latent
/// field: each edge contributes `exp(beta * [z_i == z_j])`. The root is
/// uniform since the field density does not depend on it.
pub fn posterior_spanning_tree<R: Rng + ?Sized>(
    nug: &Nug,
    z: &LatentField,
    beta: f64,
    rng: &mut R,
) -> Result<Dag> {
    nug.require_connected()?;
    if z.len() != nug.n() {
        return Err(Error::DimensionMismatch { expected: nug.n(), got: z.len() });
    }
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
    }
    let root = rng.random_range(0..nug.n().max(1));
    let z = z.values();
    // matches weigh 1, mismatches exp(-beta): the same ratios without overflow
    let mismatch = (-beta).exp();
    let mut buf = Vec::new();
    Ok(wilson(nug, root, rng, |rng, u, nb| {
        buf.clear();
        buf.extend(nb.iter().map(|&v| if z[u] == z[v] { 1.0 } else { mismatch }));
        pick_weighted(rng, nb, &buf)
    }))
}

fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, items: &[usize], weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (&item, &w) in items.iter().zip(weights) {
        if r < w {
            return item;
        }
        r -= w;
    }
    *items.last().expect("walk from a vertex with no neighbors")
}

/// Loop-erased walks from each vertex, in index order, into the growing
/// tree rooted at `root`. `step` picks the next vertex from a neighbor list.
fn wilson<R, S>(nug: &Nug, root: usize, rng: &mut R, mut step: S) -> Dag
where
    R: Rng + ?Sized,
    S: FnMut(&mut R, usize, &[usize]) -> usize,
{
    let n = nug.n();
    let mut in_tree = vec![false; n];
    let mut next = vec![usize::MAX; n];
    if n > 0 {
        in_tree[root] = true;
    }
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            next[u] = step(rng, u, nug.neighbors(u));
            u = next[u];
        }
        // retrace the walk; overwritten pointers have erased the loops
        u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = next[u];
        }
    }
    let parents = (0..n)
        .map(|v| if v == root { Vec::new() } else { vec![next[v]] })
        .collect();
    Dag::from_parents(parents, DagClass::SpanningTree, (n > 0).then_some(root))
}
