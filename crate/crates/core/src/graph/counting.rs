//! Exact combinatorial counts over a [`Nug`]: spanning trees via the
//! matrix-tree theorem and acyclic orientations via the chromatic polynomial.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, Zero};

use super::Nug;
use crate::error::{Error, Result};

/// Default edge cap for [`count_acyclic_orientations`].
pub const DEFAULT_ORIENTATION_EDGE_CAP: usize = 24;

/// Number of spanning trees, as the `(n-1, n-1)` cofactor of the Laplacian.
pub fn count_spanning_trees(nug: &Nug) -> Result<BigUint> {
    let n = nug.n();
    if n == 0 {
        return Err(Error::InvalidParameter("graph has no vertices".into()));
    }
    laplacian_cofactor(nug, n - 1, n - 1)
}

/// The signed `(row, col)` cofactor of the Laplacian. Every cofactor equals
/// the spanning-tree count.
pub fn laplacian_cofactor(nug: &Nug, row: usize, col: usize) -> Result<BigUint> {
    nug.require_connected()?;
    let n = nug.n();
    if row >= n || col >= n {
        return Err(Error::DimensionMismatch { expected: n, got: row.max(col) + 1 });
    }
    let lap = nug.laplacian();
    let minor: Vec<Vec<BigInt>> = lap
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|&(j, _)| j != col)
                .map(|(_, &v)| BigInt::from(v))
                .collect()
        })
        .collect();
    let mut det = bareiss_determinant(minor);
    if (row + col) % 2 == 1 {
        det = -det;
    }
    match det.sign() {
        Sign::Minus => unreachable!("cofactor of a connected Laplacian is positive"),
        _ => Ok(det.magnitude().clone()),
    }
}

/// Fraction-free Gaussian elimination. Every intermediate division is exact.
fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let k = m.len();
    if k == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for p in 0..k {
        if m[p][p].is_zero() {
            match (p + 1..k).find(|&r| !m[r][p].is_zero()) {
                Some(r) => {
                    m.swap(p, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in p + 1..k {
            for j in p + 1..k {
                let v = (&m[i][j] * &m[p][p] - &m[i][p] * &m[p][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[p][p].clone();
    }
    sign * &m[k - 1][k - 1]
}

/// Number of acyclic orientations, `(-1)^n * chi(N, -1)`, computed by
/// deletion-contraction on the chromatic polynomial.
pub fn count_acyclic_orientations(nug: &Nug, edge_cap: usize) -> Result<BigUint> {
    if nug.edge_count() > edge_cap {
        return Err(Error::Intractable { edges: nug.edge_count(), cap: edge_cap });
    }
    let n = nug.n();
    let edges: Vec<(usize, usize)> = nug.edges().iter().map(|e| (e.lo, e.hi)).collect();
    let mut memo = HashMap::new();
    let chi = chromatic_at_minus_one(n, edges, &mut memo);
    let count = if n.is_multiple_of(2) { chi } else { -chi };
    debug_assert!(!count.is_negative());
    Ok(count.magnitude().clone())
}

type Key = (usize, Vec<(usize, usize)>);

/// chi(G, -1) for a simple graph on `n` vertices with edges `(lo, hi)`.
fn chromatic_at_minus_one(
    n: usize,
    mut edges: Vec<(usize, usize)>,
    memo: &mut HashMap<Key, BigInt>,
) -> BigInt {
    edges.sort_unstable();
    edges.dedup();

    // Forests have the closed form k^c (k-1)^(n-c).
    let components = forest_components(n, &edges);
    if let Some(c) = components {
        let sign = if c % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        return sign * num_traits::pow(BigInt::from(-2), n - c);
    }

    let key = (n, edges);
    if let Some(v) = memo.get(&key) {
        return v.clone();
    }
    let (n, edges) = key;

    let (u, v) = *edges.last().expect("non-forest has edges");
    let deleted: Vec<_> = edges[..edges.len() - 1].to_vec();

    // Contract v into u, then shift indices above v down by one.
    let relabel = |x: usize| {
        let x = if x == v { u } else { x };
        if x > v {
            x - 1
        } else {
            x
        }
    };
    let contracted: Vec<_> = deleted
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (relabel(a), relabel(b));
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect();

    let result = chromatic_at_minus_one(n, deleted, memo)
        - chromatic_at_minus_one(n - 1, contracted, memo);
    memo.insert((n, edges), result.clone());
    result
}

/// Component count if the graph is a forest, otherwise `None`.
fn forest_components(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }
    Some(n - edges.len())
}
