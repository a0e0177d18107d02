//! Error metrics, random targets and the reproducible experiments.

use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{
    alpha_for_eps, build_deep, build_shallow_fixed, build_shallow_trainable, error_bound, Schedule, Variant,
};
use crate::error::{Error, Result};
use crate::netcore::{network_kernel, sample_kernel, Kernel, Network};

/// Values of eps in the two-bit experiment.
pub const TABLE8_EPS: [f64; 5] = [0.025, 0.0125, 0.00625, 0.003125, 0.0015625];

/// Largest entrywise difference between two kernels of the same shape.
pub fn max_abs_error(p: &Kernel, p_star: &Kernel) -> Result<f64> {
    if p.d() != p_star.d() || p.s() != p_star.s() {
        return Err(Error::Shape(format!(
            "kernels {}x{} and {}x{} differ in shape",
            p.d(),
            p.s(),
            p_star.d(),
            p_star.s()
        )));
    }
    Ok(p.rows()
        .iter()
        .flatten()
        .zip(p_star.rows().iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Moves every entry into `[eps, 1 - eps]`.
///
/// Entries below `eps` are raised to `eps`; the deficit is taken from the
/// other entries in proportion to their excess over `eps`. Rows already
/// inside the slab are returned unchanged.
pub fn clamp_to_eps(p: &Kernel, eps: f64) -> Result<Kernel> {
    let n = 1usize << p.s();
    if !(eps > 0.0 && eps < 1.0 / n as f64) {
        return Err(Error::OutOfRange(format!("eps must lie in (0, 1/2^s) = (0, {}), got {eps}", 1.0 / n as f64)));
    }
    let rows = p
        .rows()
        .iter()
        .map(|row| {
            let deficit: f64 = row.iter().map(|&v| (eps - v).max(0.0)).sum();
            if deficit == 0.0 {
                return row.clone();
            }
            let excess: f64 = row.iter().map(|&v| (v - eps).max(0.0)).sum();
            let keep = 1.0 - deficit / excess;
            row.iter().map(|&v| if v <= eps { eps } else { eps + (v - eps) * keep }).collect()
        })
        .collect();
    Ok(Kernel::from_rows_unchecked(p.d(), p.s(), rows))
}

/// Kernel whose rows are independent uniform draws from the simplex.
///
/// Row `x` uses its own ChaCha stream, so rows do not depend on each other.
pub fn random_kernel(d: usize, s: usize, seed: u64) -> Kernel {
    let rows = (0..1u64 << d)
        .map(|x| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(x);
            let draws: Vec<f64> = (0..1usize << s).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = draws.iter().sum();
            draws.iter().map(|v| v / total).collect()
        })
        .collect();
    Kernel::from_rows_unchecked(d, s, rows)
}

/// Seed for item `index` of stream `tag` under `master`.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(tag);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "sampled" => Ok(Self::Sampled),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// One line of the two-bit experiment.
///
/// Errors are measured against the clamped targets; the `_unclamped`
/// fields compare with the raw random targets instead.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub eps: f64,
    pub alpha: f64,
    pub bound: f64,
    pub e_avg: f64,
    pub e_max: f64,
    pub e_avg_unclamped: f64,
    pub e_max_unclamped: f64,
    pub mode: Mode,
    pub trials: usize,
    pub samples_per_input: Option<u64>,
}

/// Runs the `d = s = 2`, `j = 2` experiment.
///
/// Trial `t` uses the same random target for every eps. Results do not
/// depend on thread scheduling.
pub fn table8(trials: usize, eps_list: &[f64], seed: u64, mode: Mode, samples_per_input: u64) -> Result<Vec<ExperimentRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if mode == Mode::Sampled && samples_per_input == 0 {
        return Err(Error::InvalidArgument("sampled mode needs samples per input".into()));
    }
    let targets: Vec<Kernel> = (0..trials as u64).map(|t| random_kernel(2, 2, derive_seed(seed, 0, t))).collect();
    eps_list
        .iter()
        .enumerate()
        .map(|(ei, &eps)| {
            let errs: Vec<(f64, f64, usize)> = targets
                .par_iter()
                .enumerate()
                .map(|(t, raw)| {
                    let target = clamp_to_eps(raw, eps)?;
                    let net = build_deep(&target, 2, eps, Schedule::Overlaid)?;
                    let got = match mode {
                        Mode::Exact => network_kernel(&net)?,
                        Mode::Sampled => {
                            sample_kernel(&net, samples_per_input, derive_seed(seed, 1 + ei as u64, t as u64))?
                        }
                    };
                    Ok((max_abs_error(&got, &target)?, max_abs_error(&got, raw)?, net.unit_count()))
                })
                .collect::<Result<_>>()?;
            let n = errs[0].2;
            let avg = |k: fn(&(f64, f64, usize)) -> f64| errs.iter().map(k).sum::<f64>() / trials as f64;
            let max = |k: fn(&(f64, f64, usize)) -> f64| errs.iter().map(k).fold(0.0, f64::max);
            Ok(ExperimentRow {
                eps,
                alpha: alpha_for_eps(eps, 2)?,
                bound: error_bound(eps, n)?,
                e_avg: avg(|e| e.0),
                e_max: max(|e| e.0),
                e_avg_unclamped: avg(|e| e.1),
                e_max_unclamped: max(|e| e.1),
                mode,
                trials,
                samples_per_input: (mode == Mode::Sampled).then_some(samples_per_input),
            })
        })
        .collect()
}

/// Plain-text table with columns `10 eps`, `alpha`, `bound`, `E_avg`, `E_max`.
pub fn format_table(rows: &[ExperimentRow]) -> String {
    let mut out = format!("{:>10} {:>8} {:>8} {:>8} {:>8}\n", "10eps", "alpha", "bound", "E_avg", "E_max");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>10.6} {:>8.2} {:>8.4} {:>8.4} {:>8.4}",
            10.0 * r.eps,
            r.alpha,
            r.bound,
            r.e_avg,
            r.e_max
        );
    }
    out
}

/// Which construction a sweep rebuilds at every eps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "kebab-case")]
pub enum Arch {
    ShallowFixed { scale: f64 },
    ShallowTrainable { scale: f64, variant: Variant },
    Deep { j: usize, schedule: Schedule },
}

impl Arch {
    pub fn build(&self, target: &Kernel, eps: f64) -> Result<Network> {
        match *self {
            Arch::ShallowFixed { scale } => build_shallow_fixed(target, eps, scale),
            Arch::ShallowTrainable { scale, variant } => build_shallow_trainable(target, eps, scale, variant),
            Arch::Deep { j, schedule } => build_deep(target, j, eps, schedule),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    /// Against the target clamped at this eps.
    pub error: f64,
    /// Against the target as given.
    pub error_unclamped: f64,
    pub bound: f64,
    pub n_units: usize,
}

/// Exact error of `arch` on `target` for each eps.
pub fn convergence_sweep(target: &Kernel, arch: Arch, eps_list: &[f64]) -> Result<Vec<SweepPoint>> {
    eps_list
        .iter()
        .map(|&eps| {
            let clamped = clamp_to_eps(target, eps)?;
            let net = arch.build(&clamped, eps)?;
            let got = network_kernel(&net)?;
            Ok(SweepPoint {
                eps,
                error: max_abs_error(&got, &clamped)?,
                error_unclamped: max_abs_error(&got, target)?,
                bound: error_bound(eps, net.unit_count())?,
                n_units: net.unit_count(),
            })
        })
        .collect()
}
