use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{sigmoid, Kernel, Layer, Network};
use crate::bitspace::{dec, BitVec};
use crate::error::{Error, Result};

/// Input widths up to this size get a precomputed firing table.
const TABLE_WIDTH: usize = 16;

/// Ancestral sampler with per-layer firing tables.
///
/// Each input state draws from its own ChaCha stream (stream id = input
/// index) and consumes exactly one 64-bit word per unit per sample, so
/// results do not depend on how inputs are scheduled across threads.
pub struct Sampler<'a> {
    net: &'a Network,
    tables: Vec<Option<Vec<f64>>>,
}

impl<'a> Sampler<'a> {
    pub fn new(net: &'a Network) -> Self {
        let tables = net
            .layers()
            .iter()
            .map(|l| (l.in_width() <= TABLE_WIDTH).then(|| l.firing_table()))
            .collect();
        Self { net, tables }
    }

    /// Output-state counts for `n` samples from input state `x`.
    pub fn counts(&self, x: usize, n: u64, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(x as u64);
        let mut counts = vec![0u64; 1 << self.net.s()];
        for _ in 0..n {
            let mut state = x;
            for (layer, table) in self.net.layers().iter().zip(&self.tables) {
                state = step(layer, table.as_deref(), state, &mut rng);
            }
            counts[state] += 1;
        }
        counts
    }

    /// Empirical kernel with `n` samples per input.
    pub fn kernel(&self, n: u64, seed: u64) -> Kernel {
        let rows = (0..1usize << self.net.d())
            .into_par_iter()
            .map(|x| self.counts(x, n, seed).iter().map(|&c| c as f64 / n as f64).collect())
            .collect();
        Kernel::from_rows_unchecked(self.net.d(), self.net.s(), rows)
    }
}

fn step(layer: &Layer, table: Option<&[f64]>, prev: usize, rng: &mut ChaCha8Rng) -> usize {
    let n_out = layer.out_width();
    let mut next = 0usize;
    for u in 0..n_out {
        let p = match table {
            Some(t) => t[prev * n_out + u],
            None => sigmoid(layer.pre_activation(u, prev)),
        };
        // 53-bit uniform in [0, 1).
        let r = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if r < p {
            next |= 1 << u;
        }
    }
    next
}

/// Counts of each output state over `n` ancestral samples from input `x`.
pub fn sample(net: &Network, x: &BitVec, n: u64, seed: u64) -> Result<Vec<u64>> {
    if x.len() != net.d() {
        return Err(Error::LengthMismatch { expected: net.d(), found: x.len() });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    Ok(Sampler::new(net).counts(dec(x) as usize, n, seed))
}

/// Empirical kernel from `n` samples per input.
pub fn sample_kernel(net: &Network, n: u64, seed: u64) -> Result<Kernel> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    Ok(Sampler::new(net).kernel(n, seed))
}
