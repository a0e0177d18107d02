//! Building blocks: copy, gate, sharing and output layers, plus the
//! hyperplanes used by the shallow constructions.

use serde::{Deserialize, Serialize};

use crate::bitspace::{bin, hamming, BitVec};
use crate::error::{Error, Result};
use crate::netcore::{logit, Layer};

/// Tolerance when checking that sharing probabilities lie in `[eps, 1 - eps]`.
const RHO_TOL: f64 = 1e-9;

/// `logit(1 - eps)`, the per-unit gain that makes a unit err with probability `eps`.
pub fn gain(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    logit(1.0 - eps)
}

/// One probability mass sharing step inside a block of `m` units.
///
/// `rho` is the probability that unit `i` is 1 when the block is in state `g`.
/// `g_hat` differs from `g` in one position other than `i`; with
/// `rho_hat = Some(p)` unit `i` fires with probability `p` in state `g_hat`,
/// and with `None` it simply copies there. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharingStep {
    pub layer: usize,
    pub g: BitVec,
    pub g_hat: BitVec,
    pub i: usize,
    pub rho: f64,
    pub rho_hat: Option<f64>,
}

impl SharingStep {
    /// Position where `g` and `g_hat` differ.
    pub fn partner_bit(&self) -> usize {
        (0..self.g.len())
            .find(|&k| self.g.get(k) != self.g_hat.get(k))
            .expect("g and g_hat differ")
    }

    fn check(&self, m: usize, eps: f64) -> Result<()> {
        if m < 2 {
            return Err(Error::InvalidArgument("sharing needs a block of at least 2 units".into()));
        }
        if self.g.len() != m || self.g_hat.len() != m {
            return Err(Error::LengthMismatch { expected: m, found: self.g.len().max(self.g_hat.len()) });
        }
        if hamming(&self.g, &self.g_hat)? != 1 {
            return Err(Error::InvalidArgument("g and g_hat must be Hamming neighbours".into()));
        }
        if self.i >= m {
            return Err(Error::OutOfRange(format!("unit {} in a block of {m}", self.i)));
        }
        if self.i == self.partner_bit() {
            return Err(Error::InvalidArgument("the sharing unit must differ from the bit where g and g_hat differ".into()));
        }
        for p in std::iter::once(self.rho).chain(self.rho_hat) {
            if !(p >= eps - RHO_TOL && p <= 1.0 - eps + RHO_TOL) {
                return Err(Error::OutOfRange(format!("sharing probability {p} outside [{eps}, {}]", 1.0 - eps)));
            }
        }
        Ok(())
    }
}

/// Unit `unit` copies input `input`: weight `2 gamma`, bias `-gamma`.
pub(crate) fn write_copy(layer: &mut Layer, unit: usize, input: usize, gamma: f64) {
    layer.set_weight(unit, input, 2.0 * gamma);
    layer.set_bias(unit, -gamma);
}

/// Writes the sharing unit of `step` for the block occupying `offset..offset + m`.
///
/// Pre-activation `a + c xi(h) + sg P f(h) - sg Q D(h)` where `xi` tests
/// `h_j = g_hat_j`, `f` tests `h_i != g_i`, `D` counts mismatches with `g`
/// outside `{i, j}` and `sg = +1` when `g_i = 0`, else `-1`.
pub(crate) fn write_sharing(layer: &mut Layer, offset: usize, m: usize, step: &SharingStep, gamma: f64) -> Result<()> {
    let (i, j) = (step.i, step.partner_bit());
    let sg = if step.g.get(i) == 0 { 1.0 } else { -1.0 };
    let clamp = |p: f64| p.clamp(1.0 / (1.0 + gamma.exp()), 1.0 - 1.0 / (1.0 + gamma.exp()));
    let a = logit(clamp(step.rho))?;
    let (c, p) = match step.rho_hat {
        Some(rh) => (logit(clamp(rh))? - a, 2.0 * gamma * (m as f64 - 1.0)),
        None => (-sg * 2.0 * gamma, 2.0 * gamma * m as f64),
    };
    let q = 2.0 * gamma;

    let unit = offset + i;
    let mut w = vec![0.0; m];
    let mut bias = a;
    // Adds coef * [h_k == target] as an affine term.
    let mut add = |k: usize, target: u8, coef: f64| {
        if target == 1 {
            w[k] += coef;
        } else {
            bias += coef;
            w[k] -= coef;
        }
    };
    add(j, step.g_hat.get(j), c);
    add(i, 1 - step.g.get(i), sg * p);
    for k in (0..m).filter(|&k| k != i && k != j) {
        add(k, 1 - step.g.get(k), -sg * q);
    }
    for (k, wk) in w.into_iter().enumerate() {
        layer.set_weight(unit, offset + k, wk);
    }
    layer.set_bias(unit, bias);
    Ok(())
}

/// Every unit copies its counterpart with probability `1 - eps`.
pub fn copy_layer(m: usize, eps: f64) -> Result<Layer> {
    let gamma = gain(eps)?;
    if m == 0 {
        return Err(Error::InvalidArgument("copy layer needs at least one unit".into()));
    }
    let mut layer = Layer::zeros(m, m);
    for u in 0..m {
        write_copy(&mut layer, u, u, gamma);
    }
    Ok(layer)
}

/// A single block of `m` units performing `step`; every other unit copies.
pub fn sharing_layer(m: usize, step: &SharingStep, eps: f64) -> Result<Layer> {
    step.check(m, eps)?;
    let mut layer = copy_layer(m, eps)?;
    write_sharing(&mut layer, 0, m, step, gain(eps)?)?;
    Ok(layer)
}

pub(crate) fn check_step(m: usize, step: &SharingStep, eps: f64) -> Result<()> {
    step.check(m, eps)
}

/// `(2g - 1) . x_[1,j] - |g|`: zero on the face `x_[1,j] = g`, at most -1 elsewhere.
/// Returned as per-input weights (length `d`) and a bias.
pub(crate) fn face_functional(g: &BitVec, d: usize) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; d];
    for k in 0..g.len() {
        w[k] = 2.0 * f64::from(g.get(k)) - 1.0;
    }
    (w, -(g.count_ones() as f64))
}

/// First hidden layer of the deep construction, blocks of `s + d - j` units.
///
/// Block `t` is responsible for inputs whose first `j` bits encode `t`: its
/// first unit fires on that face, its remaining `s - 1` units stay off, and
/// its last `d - j` units copy the remaining input bits.
pub fn gate_layer(d: usize, s: usize, j: usize, eps: f64) -> Result<Layer> {
    gate_layer_with(d, s, j, eps, None)
}

/// [`gate_layer`], optionally fusing the first sharing step of every block into
/// unit `k`: on the block's face that unit fires with logit `first.1[t]`.
pub(crate) fn gate_layer_with(d: usize, s: usize, j: usize, eps: f64, first: Option<(usize, &[f64])>) -> Result<Layer> {
    if j > d {
        return Err(Error::InvalidArgument(format!("j = {j} exceeds d = {d}")));
    }
    if s == 0 {
        return Err(Error::InvalidArgument("need s >= 1".into()));
    }
    let gamma = gain(eps)?;
    let m = s + d - j;
    let blocks = 1usize << j;
    let mut layer = Layer::zeros(d, blocks * m);
    for t in 0..blocks {
        let off = t * m;
        let g = bin(t as u64, j)?;
        let (fw, fb) = face_functional(&g, d);
        for (k, &w) in fw.iter().enumerate() {
            layer.set_weight(off, k, 2.0 * gamma * w);
        }
        layer.set_bias(off, 2.0 * gamma * fb + gamma);
        for u in 1..s {
            layer.set_bias(off + u, -gamma);
        }
        for u in 0..d - j {
            write_copy(&mut layer, off + s + u, j + u, gamma);
        }
        if let Some((k, logits)) = first {
            for (kk, &w) in fw.iter().enumerate() {
                layer.set_weight(off + k, kk, 2.0 * gamma * w);
            }
            layer.set_bias(off + k, 2.0 * gamma * fb + logits[t]);
        }
    }
    Ok(layer)
}

/// Output unit `i` is an OR over unit `i` of every block's first `s` units.
pub fn or_output_layer(d: usize, s: usize, j: usize, eps: f64) -> Result<Layer> {
    if j > d {
        return Err(Error::InvalidArgument(format!("j = {j} exceeds d = {d}")));
    }
    let gamma = gain(eps)?;
    let m = s + d - j;
    let blocks = 1usize << j;
    let mut layer = Layer::zeros(blocks * m, s);
    for i in 0..s {
        for t in 0..blocks {
            layer.set_weight(i, t * m + i, 2.0 * gamma);
        }
        layer.set_bias(i, -gamma);
    }
    Ok(layer)
}

/// Affine functional vanishing on the edge `{x1, x2}` and at most -2 elsewhere.
pub fn edge_hyperplane(x1: &BitVec, x2: &BitVec) -> Result<(Vec<f64>, f64)> {
    if hamming(x1, x2)? != 1 {
        return Err(Error::InvalidArgument(format!("{x1} and {x2} are not an edge of the cube")));
    }
    let mut w = vec![0.0; x1.len()];
    let mut c = 0.0;
    for k in 0..x1.len() {
        if x1.get(k) != x2.get(k) {
            continue;
        }
        if x1.get(k) == 1 {
            w[k] = 2.0;
            c -= 2.0;
        } else {
            w[k] = -2.0;
        }
    }
    Ok((w, c))
}

/// Affine functional vanishing at `x` and at most -2 at every other vertex.
pub(crate) fn vertex_functional(x: &BitVec) -> (Vec<f64>, f64) {
    let w = x.bits().iter().map(|&b| if b == 1 { 2.0 } else { -2.0 }).collect();
    (w, -2.0 * x.count_ones() as f64)
}

/// Largest `s` accepted by [`orthant_map_weights`].
pub const MAX_ORTHANT_BITS: usize = 8;

/// `s x (2^s - 1)` matrix whose column `l` (1-based) is `2^(l+1) (bin_s(l) - 1/2)`,
/// and bias `-1`; `Wz + b` lies in the orthant of `bin_s(l(z))`.
pub fn orthant_map_weights(s: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if s == 0 || s > MAX_ORTHANT_BITS {
        return Err(Error::OutOfRange(format!("orthant map needs 1 <= s <= {MAX_ORTHANT_BITS}, got {s}")));
    }
    let n = (1usize << s) - 1;
    let mut w = vec![vec![0.0; n]; s];
    for l in 1..=n {
        let mag = 2f64.powi(l as i32);
        for (r, row) in w.iter_mut().enumerate() {
            row[l - 1] = if (l >> r) & 1 == 1 { mag } else { -mag };
        }
    }
    Ok((w, vec![-1.0; s]))
}
