//! Inverting the two probability chains used by the constructions.

use crate::bitspace::{dec, GrayCode};
use crate::error::{Error, Result};
use crate::netcore::ProductDistribution;

const TOL: f64 = 1e-9;

fn check_row(q: &[f64]) -> Result<usize> {
    if q.len() < 2 || !q.len().is_power_of_two() {
        return Err(Error::Shape(format!("distribution of length {} is not over {{0,1}}^s with s >= 1", q.len())));
    }
    if q.iter().any(|v| !(0.0..=1.0 + TOL).contains(v)) {
        return Err(Error::NotNormalized("entries must lie in [0, 1]".into()));
    }
    let sum: f64 = q.iter().sum();
    if (sum - 1.0).abs() > TOL {
        return Err(Error::NotNormalized(format!("entries sum to {sum}")));
    }
    Ok(q.len().trailing_zeros() as usize)
}

/// Independent bits `z_1..z_N`, `N = 2^s - 1`, such that `bin_s(l(z))` has distribution `q`.
///
/// Bit `i` fires with probability `q_i / (q_0 + ... + q_i)`, so the largest
/// set index equals `i` with probability exactly `q_i`.
pub fn invert_product_chain(q: &[f64]) -> Result<ProductDistribution> {
    check_row(q)?;
    if let Some(k) = q.iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument(format!("entry {k} is zero; clamp the target first")));
    }
    let mut prefix = q[0];
    let mut probs = Vec::with_capacity(q.len() - 1);
    for &qi in &q[1..] {
        prefix += qi;
        probs.push((qi / prefix).min(1.0));
    }
    ProductDistribution::new(probs)
}

/// Stick-breaking: the probability of moving on at each of `masses.len() - 1` steps
/// so that the walk stops at step `t` with probability `masses[t]`.
pub(crate) fn stick_break(masses: &[f64]) -> Result<Vec<f64>> {
    let mut tail: f64 = masses.iter().sum();
    let mut rho = Vec::with_capacity(masses.len().saturating_sub(1));
    for (t, &q) in masses[..masses.len() - 1].iter().enumerate() {
        let after: f64 = masses[t + 1..].iter().sum();
        if tail <= 0.0 {
            return Err(Error::InvalidArgument(format!("no mass left at step {}; clamp the target first", t + 1)));
        }
        rho.push((after / tail).clamp(0.0, 1.0));
        tail -= q;
    }
    Ok(rho)
}

/// Sharing probabilities `rho[r]` (moving on from code entry `r` to `r + 1`)
/// whose stick-breaking products reproduce `target` along `code`.
pub fn invert_sharing_chain(target: &[f64], code: &GrayCode) -> Result<Vec<f64>> {
    let s = check_row(target)?;
    if code.width() != s || !code.is_full() || !code.is_adjacent_chain() {
        return Err(Error::InvalidArgument(format!("expected a full Gray code on {s} bits")));
    }
    let masses: Vec<f64> = code.entries.iter().map(|v| target[dec(v) as usize]).collect();
    stick_break(&masses)
}
