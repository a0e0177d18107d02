use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Layer, Network};
use crate::bitspace::state_bit;
use crate::error::{Error, Result};

/// Tolerance used when accepting externally supplied distributions.
const INPUT_TOL: f64 = 1e-9;

/// Default hidden-unit budget of [`network_kernel_bruteforce`].
pub const BRUTEFORCE_HIDDEN_CAP: usize = 14;

/// Row-stochastic `2^d x 2^s` matrix; row `x` is the output distribution given input `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub struct Kernel {
    d: usize,
    s: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawKernel {
    d: usize,
    s: usize,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawKernel> for Kernel {
    type Error = Error;

    fn try_from(raw: RawKernel) -> Result<Self> {
        Kernel::new(raw.d, raw.s, raw.rows)
    }
}

impl From<Kernel> for RawKernel {
    fn from(k: Kernel) -> Self {
        RawKernel { d: k.d, s: k.s, rows: k.rows }
    }
}

impl Kernel {
    /// Checks shape, entry range and row sums (to 1e-9).
    pub fn new(d: usize, s: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if d > super::WIDTH_CAP || s > super::WIDTH_CAP {
            return Err(Error::Capacity(format!("kernel {d} -> {s} bits is too large")));
        }
        if rows.len() != 1 << d {
            return Err(Error::Shape(format!("expected {} rows, found {}", 1usize << d, rows.len())));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != 1 << s {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {}", row.len(), 1usize << s)));
            }
            check_distribution(row).map_err(|e| match e {
                Error::NotNormalized(m) => Error::NotNormalized(format!("row {i}: {m}")),
                other => other,
            })?;
        }
        Ok(Self { d, s, rows })
    }

    pub(crate) fn from_rows_unchecked(d: usize, s: usize, rows: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(rows.len(), 1 << d);
        Self { d, s, rows }
    }

    pub fn uniform(d: usize, s: usize) -> Self {
        let p = 1.0 / (1u64 << s) as f64;
        Self { d, s, rows: vec![vec![p; 1 << s]; 1 << d] }
    }

    /// Identity channel on `n` bits.
    pub fn identity(n: usize) -> Self {
        let rows = (0..1usize << n)
            .map(|i| (0..1usize << n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { d: n, s: n, rows }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Matrix product `self * next`.
    pub fn compose(&self, next: &Kernel) -> Result<Kernel> {
        if self.s != next.d {
            return Err(Error::Shape(format!("cannot compose {}-bit outputs with {}-bit inputs", self.s, next.d)));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut out = vec![0.0; 1 << next.s];
                for (h, &p) in r.iter().enumerate() {
                    if p != 0.0 {
                        for (o, &q) in out.iter_mut().zip(&next.rows[h]) {
                            *o += p * q;
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Kernel { d: self.d, s: next.s, rows })
    }

    /// Joint distribution of `(X, Y)` when `X` has distribution `input`.
    pub fn joint(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        if input.len() != self.rows.len() {
            return Err(Error::LengthMismatch { expected: self.rows.len(), found: input.len() });
        }
        Ok(self
            .rows
            .iter()
            .zip(input)
            .map(|(r, &px)| r.iter().map(|&p| p * px).collect())
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("kernel JSON: {e}")))
    }
}

fn check_distribution(row: &[f64]) -> Result<()> {
    if let Some(v) = row.iter().find(|v| !(-INPUT_TOL..=1.0 + INPUT_TOL).contains(*v)) {
        return Err(Error::NotNormalized(format!("entry {v} outside [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > INPUT_TOL {
        return Err(Error::NotNormalized(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// Independent bits; `unit_probs[i]` is the probability that bit `i` is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductDistribution {
    pub unit_probs: Vec<f64>,
}

impl ProductDistribution {
    pub fn new(unit_probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = unit_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::OutOfRange(format!("unit probability {p}")));
        }
        Ok(Self { unit_probs })
    }

    pub fn len(&self) -> usize {
        self.unit_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_probs.is_empty()
    }
}

/// Expands independent bits into the full `2^n` distribution.
pub fn product_expand(p: &ProductDistribution) -> Vec<f64> {
    let mut out = vec![0.0; 1 << p.len()];
    expand_into(&p.unit_probs, &mut out);
    out
}

/// Writes the product distribution of `probs` into `out[..2^n]`.
fn expand_into(probs: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    for (u, &p) in probs.iter().enumerate() {
        let half = 1usize << u;
        for t in 0..half {
            let v = out[t];
            out[t] = v * (1.0 - p);
            out[t | half] = v * p;
        }
    }
}

/// Exact kernel of one layer.
pub fn layer_kernel(layer: &Layer) -> Result<Kernel> {
    layer.check_capacity()?;
    let n_out = layer.out_width();
    let table = layer.firing_table();
    let rows = table
        .par_chunks(n_out)
        .map(|probs| {
            let mut row = vec![0.0; 1 << n_out];
            expand_into(probs, &mut row);
            row
        })
        .collect();
    Ok(Kernel::from_rows_unchecked(layer.in_width(), n_out, rows))
}

/// Exact input-output kernel: the product of the layer kernels.
///
/// Rows are propagated one layer at a time, so only one distribution per
/// layer is held in memory for each input.
pub fn network_kernel(net: &Network) -> Result<Kernel> {
    for layer in net.layers() {
        layer.check_capacity()?;
    }
    let tables: Vec<Vec<f64>> = net.layers().iter().map(Layer::firing_table).collect();
    let rows = (0..1usize << net.d())
        .into_par_iter()
        .map(|x| {
            let mut dist = vec![0.0; 1 << net.d()];
            dist[x] = 1.0;
            for (layer, table) in net.layers().iter().zip(&tables) {
                dist = propagate(&dist, layer.out_width(), table);
            }
            dist
        })
        .collect();
    Ok(Kernel::from_rows_unchecked(net.d(), net.s(), rows))
}

fn propagate(dist: &[f64], n_out: usize, table: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << n_out];
    let mut scratch = vec![0.0; 1 << n_out];
    for (h, &mass) in dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        expand_into(&table[h * n_out..(h + 1) * n_out], &mut scratch);
        for (o, &p) in out.iter_mut().zip(&scratch) {
            *o += mass * p;
        }
    }
    out
}

/// Kernel by explicit summation over every tuple of hidden states.
pub fn network_kernel_bruteforce(net: &Network) -> Result<Kernel> {
    network_kernel_bruteforce_with_cap(net, BRUTEFORCE_HIDDEN_CAP)
}

/// [`network_kernel_bruteforce`] with a caller-chosen hidden-unit budget.
pub fn network_kernel_bruteforce_with_cap(net: &Network, cap: usize) -> Result<Kernel> {
    let hidden: usize = net.hidden_widths().iter().sum();
    if hidden > cap {
        return Err(Error::Capacity(format!("{hidden} hidden units exceeds the oracle cap of {cap}")));
    }
    if net.layers().iter().any(|l| l.out_width() > super::WIDTH_CAP) || net.d() > super::WIDTH_CAP {
        return Err(Error::Capacity("layer too wide to enumerate".into()));
    }
    let rows = (0..1usize << net.d())
        .into_par_iter()
        .map(|x| {
            let mut row = vec![0.0; 1 << net.s()];
            enumerate(net.layers(), x, 1.0, &mut row);
            row
        })
        .collect();
    Ok(Kernel::from_rows_unchecked(net.d(), net.s(), rows))
}

fn enumerate(layers: &[Layer], prev: usize, weight: f64, row: &mut [f64]) {
    let (layer, rest) = layers.split_first().expect("at least one layer");
    for h in 0..1usize << layer.out_width() {
        let p = weight * transition(layer, prev, h);
        if rest.is_empty() {
            row[h] += p;
        } else if p != 0.0 {
            enumerate(rest, h, p, row);
        }
    }
}

/// `p(h | prev)` evaluated unit by unit.
fn transition(layer: &Layer, prev: usize, h: usize) -> f64 {
    (0..layer.out_width())
        .map(|u| {
            let t = layer.pre_activation(u, prev);
            if state_bit(h, u) == 1 {
                sigmoid(t)
            } else {
                sigmoid(-t)
            }
        })
        .product()
}

/// `I(X; Y)` in bits for a joint distribution given as rows over `x`.
pub fn mutual_information(joint: &[Vec<f64>]) -> Result<f64> {
    let n_y = joint.first().map_or(0, Vec::len);
    if joint.iter().any(|r| r.len() != n_y) {
        return Err(Error::Shape("ragged joint distribution".into()));
    }
    if joint.iter().flatten().any(|&p| !(p >= 0.0)) {
        return Err(Error::NotNormalized("negative joint entry".into()));
    }
    let total: f64 = joint.iter().flatten().sum();
    if (total - 1.0).abs() > INPUT_TOL {
        return Err(Error::NotNormalized(format!("joint sums to {total}")));
    }
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..n_y).map(|y| joint.iter().map(|r| r[y]).sum()).collect();
    let h = |ps: &mut dyn Iterator<Item = f64>| -> f64 {
        ps.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
    };
    let hx = h(&mut px.iter().copied());
    let hy = h(&mut py.iter().copied());
    let hxy = h(&mut joint.iter().flatten().copied());
    Ok(hx + hy - hxy)
}
