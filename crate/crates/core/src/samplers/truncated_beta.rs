//! Draws from a beta distribution restricted to an interval.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::beta::beta_reg;

use crate::model::BetaShape;

/// Below this interval mass, inversion is abandoned for rejection.
const MIN_MASS: f64 = 1e-12;
const REJECTION_TRIES: usize = 10_000;

/// Inverse-CDF draw from `Beta(a, b)` truncated to `(lo, hi)`. Works in the
/// upper tail through the survival function when the interval sits there,
/// so the CDF difference keeps its precision. Falls back to rejection when
/// the interval mass is below 1e-12; `None` means both approaches failed.
pub fn sample_truncated_beta<R: Rng + ?Sized>(
    shape: BetaShape,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Option<f64> {
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    if lo >= hi {
        return None;
    }
    let BetaShape { a, b } = shape;
    let cdf = |x: f64| beta_reg(a, b, x);
    let sf = |x: f64| beta_reg(b, a, 1.0 - x);

    let f_lo = cdf(lo);
    let upper_tail = f_lo > 0.5;
    let (g, g_lo, g_hi): (&dyn Fn(f64) -> f64, f64, f64) = if upper_tail {
        // decreasing in x
        (&sf, sf(lo), sf(hi))
    } else {
        (&cdf, f_lo, cdf(hi))
    };
    let mass = (g_hi - g_lo).abs();
    if mass.is_finite() && mass >= MIN_MASS {
        let target = g_lo + rng.random::<f64>() * (g_hi - g_lo);
        let x = invert_monotone(g, target, lo, hi, upper_tail);
        if x > lo && x < hi {
            return Some(x);
        }
    }
    rejection(shape, lo, hi, rng)
}

/// Bisection for `g(x) = target` on `[lo, hi]`.
fn invert_monotone(g: &dyn Fn(f64) -> f64, target: f64, lo: f64, hi: f64, decreasing: bool) -> f64 {
    let (mut left, mut right) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if mid <= left || mid >= right {
            break;
        }
        let below = if decreasing { g(mid) > target } else { g(mid) < target };
        if below {
            left = mid;
        } else {
            right = mid;
        }
    }
    0.5 * (left + right)
}

fn rejection<R: Rng + ?Sized>(shape: BetaShape, lo: f64, hi: f64, rng: &mut R) -> Option<f64> {
    let dist = Beta::new(shape.a, shape.b).ok()?;
    (0..REJECTION_TRIES).map(|_| dist.sample(rng)).find(|&x| x > lo && x < hi)
}
