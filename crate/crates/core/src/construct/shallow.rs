//! Shallow universal approximators: one hidden layer followed by a fixed
//! deterministic read-out.

use serde::{Deserialize, Serialize};

use super::chains::invert_product_chain;
use super::layers::{edge_hyperplane, gain, orthant_map_weights, vertex_functional};
use crate::bitspace::bin;
use crate::error::{Error, Result};
use crate::netcore::{logit, sigmoid, Kernel, Layer, Network};
use crate::verify::clamp_to_eps;

/// Read-out gain used when the caller has no preference.
pub const DEFAULT_SCALE: f64 = 30.0;

/// Half-width of the initial bisection bracket for the read-out row.
const BRACKET: f64 = 50.0;
const BISECT_TOL: f64 = 1e-10;

/// How the first output bit gets an input-dependent offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// One shared output bias; exact only for `d = 0`.
    Literal,
    /// One extra always-on unit per block whose outgoing weight acts as a per-input bias.
    Anchored,
}

impl Variant {
    /// `Anchored` for `d >= 1`, `Literal` otherwise.
    pub fn default_for(d: usize) -> Self {
        if d == 0 {
            Self::Literal
        } else {
            Self::Anchored
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "anchored" => Ok(Self::Anchored),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::OutOfRange(format!("scale must be positive, got {scale}")));
    }
    Ok(())
}

/// Hidden layer of `2^(d-1)` blocks of `2^s - 1` units, one block per pair of
/// inputs differing in their first bit, and a fixed orthant read-out.
///
/// With `d = 0` the hidden layer is a single bias-only block.
pub fn build_shallow_fixed(target: &Kernel, eps: f64, scale: f64) -> Result<Network> {
    let (d, s) = (target.d(), target.s());
    if s == 0 {
        return Err(Error::InvalidArgument("need s >= 1".into()));
    }
    check_scale(scale)?;
    let gamma = gain(eps)?;
    let target = clamp_to_eps(target, eps)?;
    let (orth, orth_b) = orthant_map_weights(s)?;
    let n = (1usize << s) - 1;

    let hidden = if d == 0 {
        let p = invert_product_chain(target.row(0))?;
        let biases = p.unit_probs.iter().map(|&v| logit(v)).collect::<Result<Vec<_>>>()?;
        Layer::new(vec![vec![]; n], biases)?
    } else {
        let blocks = 1usize << (d - 1);
        let mut layer = Layer::zeros(d, blocks * n);
        for blk in 0..blocks {
            let (x0, x1) = (2 * blk, 2 * blk + 1);
            let (vt, ct) = edge_hyperplane(&bin(x0 as u64, d)?, &bin(x1 as u64, d)?)?;
            let p0 = invert_product_chain(target.row(x0))?;
            let p1 = invert_product_chain(target.row(x1))?;
            for k in 0..n {
                let (g0, g1) = (logit(p0.unit_probs[k])?, logit(p1.unit_probs[k])?);
                let unit = blk * n + k;
                for (i, &v) in vt.iter().enumerate() {
                    layer.set_weight(unit, i, gamma * v);
                }
                layer.set_weight(unit, 0, layer.weight(unit, 0) + g1 - g0);
                layer.set_bias(unit, gamma * ct + g0);
            }
        }
        layer
    };

    let width = hidden.out_width();
    let mut out = Layer::zeros(width, s);
    for r in 0..s {
        for u in 0..width {
            out.set_weight(r, u, scale * orth[r][u % n]);
        }
        out.set_bias(r, scale * orth_b[r]);
    }
    Network::new(d, vec![hidden, out])
}

/// Hidden layer with one block per input, `2^(s-1) - 1` units each (plus one
/// anchor unit per block for [`Variant::Anchored`]).
///
/// Output bits `2..s` are a fixed orthant read-out of the active block;
/// output bit 1 is a sigmoid of a tuned row `mu` over the hidden units.
pub fn build_shallow_trainable(target: &Kernel, eps: f64, scale: f64, variant: Variant) -> Result<Network> {
    let (d, s) = (target.d(), target.s());
    if s < 2 {
        return Err(Error::InvalidArgument("the trainable shallow construction needs s >= 2".into()));
    }
    check_scale(scale)?;
    let gamma = gain(eps)?;
    let target = clamp_to_eps(target, eps)?;
    let (orth, orth_b) = orthant_map_weights(s - 1)?;
    let n = (1usize << (s - 1)) - 1;
    let anchored = variant == Variant::Anchored;
    let per_block = n + usize::from(anchored);
    let inputs = 1usize << d;

    let mut hidden = Layer::zeros(d, inputs * per_block);
    let mut out = Layer::zeros(inputs * per_block, s);
    let mut shared_mu0 = None;
    for x in 0..inputs {
        let row = target.row(x);
        let pairs: Vec<f64> = (0..=n).map(|l| row[2 * l] + row[2 * l + 1]).collect();
        let ratios: Vec<f64> = (0..=n).map(|l| row[2 * l + 1] / pairs[l]).collect();
        let p = invert_product_chain(&pairs)?;
        let (vw, vc) = vertex_functional(&bin(x as u64, d)?);
        let off = x * per_block;
        for k in 0..per_block {
            for (i, &w) in vw.iter().enumerate() {
                hidden.set_weight(off + k, i, gamma * w);
            }
            let on = if k < n { logit(p.unit_probs[k])? } else { gamma };
            hidden.set_bias(off + k, gamma * vc + on);
        }

        let own_mu0 = logit(ratios[0])?;
        let mu0 = if anchored {
            out.set_weight(0, off + n, own_mu0);
            own_mu0
        } else {
            *shared_mu0.get_or_insert(own_mu0)
        };
        let mu = tune_mu(mu0, &p.unit_probs, &ratios[1..])?;
        for (k, &v) in mu.iter().enumerate() {
            out.set_weight(0, off + k, v);
        }
        for r in 1..s {
            for k in 0..n {
                out.set_weight(r, off + k, scale * orth[r - 1][k]);
            }
        }
    }
    out.set_bias(0, if anchored { 0.0 } else { shared_mu0.unwrap_or(0.0) });
    for r in 1..s {
        out.set_bias(r, scale * orth_b[r - 1]);
    }
    Network::new(d, vec![hidden, out])
}

/// `E[sigmoid(mu0 + sum_{k<l} mu_k z_k + t)]` over independent `z_k ~ Bernoulli(p_k)`.
fn mixed_sigmoid(mu0: f64, mu: &[f64], p: &[f64], t: f64) -> f64 {
    let l = mu.len();
    (0usize..1 << l)
        .map(|z| {
            let mut w = 1.0;
            let mut pre = mu0 + t;
            for k in 0..l {
                if (z >> k) & 1 == 1 {
                    w *= p[k];
                    pre += mu[k];
                } else {
                    w *= 1.0 - p[k];
                }
            }
            w * sigmoid(pre)
        })
        .sum()
}

/// Tunes `mu_1..mu_n` one at a time so that, given that unit `l` is the highest
/// active unit, output bit 1 fires with probability `ratios[l - 1]`.
fn tune_mu(mu0: f64, p: &[f64], ratios: &[f64]) -> Result<Vec<f64>> {
    let mut mu: Vec<f64> = Vec::with_capacity(ratios.len());
    for (l, &r) in ratios.iter().enumerate() {
        let reach = BRACKET + mu0.abs() + mu.iter().map(|v| v.abs()).sum::<f64>();
        let f = |t: f64| mixed_sigmoid(mu0, &mu, &p[..l], t);
        let (mut lo, mut hi) = (-reach, reach);
        if f(lo) > r || f(hi) < r {
            return Err(Error::NoConvergence(format!("ratio {r} is not bracketed for unit {}", l + 1)));
        }
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if f(mid) < r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mu.push(0.5 * (lo + hi));
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::network_kernel;
    use crate::verify::{max_abs_error, random_kernel};
    use approx::assert_abs_diff_eq;

    #[test]
    fn fixed_widths() {
        let net = build_shallow_fixed(&Kernel::uniform(1, 2), 0.01, DEFAULT_SCALE).unwrap();
        assert_eq!(net.hidden_widths(), vec![3]);
        let net = build_shallow_fixed(&Kernel::uniform(3, 2), 0.01, DEFAULT_SCALE).unwrap();
        assert_eq!(net.hidden_widths(), vec![12]);
    }

    #[test]
    fn fixed_d0_biases() {
        let target = Kernel::new(0, 2, vec![vec![0.5, 0.25, 0.125, 0.125]]).unwrap();
        let net = build_shallow_fixed(&target, 0.01, DEFAULT_SCALE).unwrap();
        // unit k fires with probability 1 - {2/3, 6/7, 7/8}
        for (b, z) in net.layers()[0].biases().iter().zip([2.0 / 3.0, 6.0 / 7.0, 7.0 / 8.0]) {
            assert_abs_diff_eq!(*b, -logit(z).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn fixed_second_layer_ignores_target() {
        let a = build_shallow_fixed(&random_kernel(2, 2, 1), 0.01, 20.0).unwrap();
        let b = build_shallow_fixed(&random_kernel(2, 2, 2), 0.01, 20.0).unwrap();
        assert_eq!(a.layers()[1], b.layers()[1]);
    }

    #[test]
    fn fixed_random_targets() {
        for seed in 0..20 {
            let target = clamp_to_eps(&random_kernel(2, 2, seed), 1e-3).unwrap();
            let net = build_shallow_fixed(&target, 1e-3, 30.0).unwrap();
            let err = max_abs_error(&network_kernel(&net).unwrap(), &target).unwrap();
            assert!(err < 0.02, "seed {seed}: {err}");
        }
    }

    #[test]
    fn trainable_single_unit_for_d0_s2() {
        let target = clamp_to_eps(&random_kernel(0, 2, 4), 1e-3).unwrap();
        let net = build_shallow_trainable(&target, 1e-3, 30.0, Variant::Literal).unwrap();
        assert_eq!(net.hidden_widths(), vec![1]);
        let err = max_abs_error(&network_kernel(&net).unwrap(), &target).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn trainable_literal_d0_s3() {
        for seed in 0..20 {
            let target = clamp_to_eps(&random_kernel(0, 3, seed), 1e-3).unwrap();
            let net = build_shallow_trainable(&target, 1e-3, 30.0, Variant::Literal).unwrap();
            assert_eq!(net.hidden_widths(), vec![3]);
            let err = max_abs_error(&network_kernel(&net).unwrap(), &target).unwrap();
            assert!(err < 0.02, "seed {seed}: {err}");
        }
    }

    #[test]
    fn trainable_anchored_d1_s2() {
        for seed in 0..20 {
            let target = clamp_to_eps(&random_kernel(1, 2, seed), 1e-3).unwrap();
            let net = build_shallow_trainable(&target, 1e-3, 30.0, Variant::Anchored).unwrap();
            assert_eq!(net.hidden_widths(), vec![4]);
            let err = max_abs_error(&network_kernel(&net).unwrap(), &target).unwrap();
            assert!(err < 0.02, "seed {seed}: {err}");
        }
    }

    #[test]
    fn literal_width_for_d1() {
        let net = build_shallow_trainable(&Kernel::uniform(1, 3), 0.01, 30.0, Variant::Literal).unwrap();
        assert_eq!(net.hidden_widths(), vec![6]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_shallow_trainable(&Kernel::uniform(1, 1), 0.01, 30.0, Variant::Anchored).is_err());
        assert!(build_shallow_fixed(&Kernel::uniform(1, 1), 0.01, -1.0).is_err());
        assert!(build_shallow_fixed(&Kernel::uniform(1, 2), 0.3, 30.0).is_err());
    }
}
