//! Perfect draws from the pairwise MRF by monotone coupling from the past.
//!
//! For `beta >= 0` the single-site heat-bath update is monotone in the
//! number of neighbors equal to 1, so running it from the all-zeros and
//! all-ones fields bounds every other start. Epochs reach back `1, 2, 4, ...`
//! sweeps, and the uniforms for each `(time, vertex)` are drawn once and
//! reused by every later epoch.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Nug;
use crate::model::{logistic, LatentField};

/// Default budget of site updates before giving up.
pub const DEFAULT_CFTP_SITE_CAP: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct CftpDraw {
    pub field: LatentField,
    /// Sweeps in the coalescing epoch.
    pub epoch_sweeps: usize,
    /// Site updates spent across all epochs.
    pub site_updates: u64,
}

/// Heat-bath probabilities `P(z_i = 1)` indexed by `#ones - #zeros + max_degree`.
pub(crate) struct HeatBath {
    offset: usize,
    prob: Vec<f64>,
}

impl HeatBath {
    pub(crate) fn new(nug: &Nug, beta: f64) -> Self {
        let offset = (0..nug.n()).map(|i| nug.degree(i)).max().unwrap_or(0);
        let prob = (0..=2 * offset)
            .map(|k| logistic(beta * (k as f64 - offset as f64)))
            .collect();
        HeatBath { offset, prob }
    }

    #[inline]
    fn p_one(&self, z: &[u8], neighbors: &[usize]) -> f64 {
        let ones: usize = neighbors.iter().map(|&j| z[j] as usize).sum();
        self.prob[self.offset + 2 * ones - neighbors.len()]
    }

    /// One systematic sweep of both bounding chains with shared uniforms.
    #[inline]
    pub(crate) fn sweep(&self, nug: &Nug, lower: &mut [u8], upper: &mut [u8], uniforms: &[f64]) {
        for (i, &u) in uniforms.iter().enumerate() {
            let nb = nug.neighbors(i);
            lower[i] = (u < self.p_one(lower, nb)) as u8;
            upper[i] = (u < self.p_one(upper, nb)) as u8;
        }
    }
}

/// An exact draw from `p(z | beta) ∝ exp(beta * T(z))`.
pub fn cftp_ising<R: Rng + ?Sized>(nug: &Nug, beta: f64, cap: u64, rng: &mut R) -> Result<LatentField> {
    cftp_ising_with_stats(nug, beta, cap, rng).map(|d| d.field)
}

pub fn cftp_ising_with_stats<R: Rng + ?Sized>(
    nug: &Nug,
    beta: f64,
    cap: u64,
    rng: &mut R,
) -> Result<CftpDraw> {
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coupling from the past needs a finite beta >= 0, got {beta}"
        )));
    }
    let n = nug.n();
    let heat_bath = HeatBath::new(nug, beta);
    // uniforms[k] drives the sweep at time -(k + 1)
    let mut uniforms: Vec<Vec<f64>> = Vec::new();
    let mut lower = vec![0u8; n];
    let mut upper = vec![1u8; n];
    let mut work = 0u64;
    let mut epoch = 1usize;
    loop {
        while uniforms.len() < epoch {
            uniforms.push((0..n).map(|_| rng.random::<f64>()).collect());
        }
        lower.fill(0);
        upper.fill(1);
        for k in (0..epoch).rev() {
            work += n as u64;
            if work > cap {
                return Err(Error::NoCoalescence { cap, beta });
            }
            heat_bath.sweep(nug, &mut lower, &mut upper, &uniforms[k]);
            debug_assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        }
        if lower == upper {
            return Ok(CftpDraw {
                field: LatentField::new(lower).expect("binary"),
                epoch_sweeps: epoch,
                site_updates: work,
            });
        }
        epoch *= 2;
    }
}
