//! Exact semantics of sigmoid layers and layered networks.
//!
//! A layer with weights `W` and biases `b` turns the previous state `h` into a
//! product distribution: unit `j` fires with probability `sigmoid(W_j . h + b_j)`.
//! States of a layer are encoded LSB-first, so unit `j` is bit `j` of the
//! state index.

mod kernel;
mod sample;

use serde::{Deserialize, Serialize};

use crate::bitspace::state_bit;
use crate::error::{Error, Result};

pub use kernel::{
    layer_kernel, mutual_information, network_kernel, network_kernel_bruteforce,
    network_kernel_bruteforce_with_cap, product_expand, Kernel, ProductDistribution,
    BRUTEFORCE_HIDDEN_CAP,
};
pub use sample::{sample, sample_kernel, Sampler};

/// Largest layer width that is enumerated.
pub const WIDTH_CAP: usize = 20;
/// Largest `in_width + out_width` of a single enumerated layer.
pub const LAYER_STATE_CAP: usize = 24;

/// `1 / (1 + e^-t)`, evaluated without overflow on either side.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(p / (1 - p))`.
pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange(format!("logit needs 0 < p < 1, got {p}")));
    }
    Ok(p.ln() - (-p).ln_1p())
}

/// One sigmoid layer; `weights` is `out_width x in_width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayer", into = "RawLayer")]
pub struct Layer {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawLayer {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl TryFrom<RawLayer> for Layer {
    type Error = Error;

    fn try_from(raw: RawLayer) -> Result<Self> {
        Layer::new(raw.w, raw.b)
    }
}

impl From<Layer> for RawLayer {
    fn from(l: Layer) -> Self {
        RawLayer { w: l.weights, b: l.biases }
    }
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        if biases.is_empty() {
            return Err(Error::Shape("a layer needs at least one unit".into()));
        }
        if weights.len() != biases.len() {
            return Err(Error::Shape(format!(
                "{} weight rows for {} biases",
                weights.len(),
                biases.len()
            )));
        }
        let n_in = weights[0].len();
        if weights.iter().any(|r| r.len() != n_in) {
            return Err(Error::Shape("ragged weight matrix".into()));
        }
        if weights.iter().flatten().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite layer parameter".into()));
        }
        Ok(Self { weights, biases })
    }

    /// All-zero layer of the given shape.
    pub fn zeros(in_width: usize, out_width: usize) -> Self {
        Self { weights: vec![vec![0.0; in_width]; out_width], biases: vec![0.0; out_width] }
    }

    pub fn in_width(&self) -> usize {
        self.weights[0].len()
    }

    pub fn out_width(&self) -> usize {
        self.biases.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weight(&self, unit: usize, input: usize) -> f64 {
        self.weights[unit][input]
    }

    pub fn bias(&self, unit: usize) -> f64 {
        self.biases[unit]
    }

    pub(crate) fn set_weight(&mut self, unit: usize, input: usize, v: f64) {
        self.weights[unit][input] = v;
    }

    pub(crate) fn set_bias(&mut self, unit: usize, v: f64) {
        self.biases[unit] = v;
    }

    /// Number of weights plus biases.
    pub fn param_count(&self) -> usize {
        self.out_width() * (self.in_width() + 1)
    }

    /// Weights then bias of every unit, row by row.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(row, &b)| row.iter().copied().chain(std::iter::once(b)))
    }

    /// `W_unit . h + b_unit` for the encoded previous state `h`.
    pub fn pre_activation(&self, unit: usize, state: usize) -> f64 {
        let row = &self.weights[unit];
        let mut acc = self.biases[unit];
        for (k, w) in row.iter().enumerate() {
            if state_bit(state, k) == 1 {
                acc += w;
            }
        }
        acc
    }

    /// Firing probabilities of every unit for every previous state,
    /// laid out as `table[state * out_width + unit]`.
    pub(crate) fn firing_table(&self) -> Vec<f64> {
        let (n_in, n_out) = (self.in_width(), self.out_width());
        let mut pre = vec![0.0; (1usize << n_in) * n_out];
        pre[..n_out].copy_from_slice(&self.biases);
        for h in 1usize..(1 << n_in) {
            let top = usize::BITS as usize - 1 - h.leading_zeros() as usize;
            let base = h ^ (1 << top);
            for u in 0..n_out {
                pre[h * n_out + u] = pre[base * n_out + u] + self.weights[u][top];
            }
        }
        pre.iter_mut().for_each(|t| *t = sigmoid(*t));
        pre
    }

    pub(crate) fn check_capacity(&self) -> Result<()> {
        let (n_in, n_out) = (self.in_width(), self.out_width());
        if n_in > WIDTH_CAP || n_out > WIDTH_CAP || n_in + n_out > LAYER_STATE_CAP {
            return Err(Error::Capacity(format!(
                "layer {n_in} -> {n_out} exceeds the enumeration cap ({WIDTH_CAP} per layer, {LAYER_STATE_CAP} in total)"
            )));
        }
        Ok(())
    }
}

/// A chain of layers reading `d` input bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct Network {
    d: usize,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    d: usize,
    layers: Vec<Layer>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = Error;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        Network::new(raw.d, raw.layers)
    }
}

impl From<Network> for RawNetwork {
    fn from(n: Network) -> Self {
        RawNetwork { d: n.d, layers: n.layers }
    }
}

impl Network {
    pub fn new(d: usize, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("a network needs at least one layer".into()));
        }
        let mut width = d;
        for (l, layer) in layers.iter().enumerate() {
            if layer.in_width() != width {
                return Err(Error::Shape(format!(
                    "layer {l} reads {} units but the previous layer has {width}",
                    layer.in_width()
                )));
            }
            width = layer.out_width();
        }
        Ok(Self { d, layers })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.layers.last().map_or(0, Layer::out_width)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(Layer::out_width).collect()
    }

    /// Units excluding the inputs: all hidden units plus the outputs.
    pub fn unit_count(&self) -> usize {
        self.layers.iter().map(Layer::out_width).sum()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// All parameters in layer order.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    /// The sub-network made of layers `range`; its input width is the width before `range.start`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Network> {
        if range.start >= range.end || range.end > self.layers.len() {
            return Err(Error::OutOfRange(format!("layer range {range:?}")));
        }
        let d = if range.start == 0 { self.d } else { self.layers[range.start - 1].out_width() };
        Network::new(d, self.layers[range].to_vec())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("network JSON: {e}")))
    }
}
