//! Deep, narrow universal approximators built from probability sharing steps.
//!
//! Hidden layers are split into `2^j` blocks of `m = s + d - j` units. Block
//! `t` serves the inputs whose first `j` bits encode `t`: its first `s` units
//! carry the output being generated, the remaining `d - j` units carry the
//! rest of the input. Layers are grouped in `2^(d-j)` subsections, one per
//! value of those remaining bits; in each, every block walks the mass of its
//! active input from `(1, 0, ..., 0)` over all output states.

use serde::{Deserialize, Serialize};

use super::chains::stick_break;
use super::layers::{check_step, copy_layer, gain, gate_layer, gate_layer_with, or_output_layer, write_sharing, SharingStep};
use crate::bitspace::{bin, face_code, partial_codes, sharing_code, BitVec};
use crate::error::{Error, Result};
use crate::netcore::{logit, Kernel, Network};
use crate::verify::clamp_to_eps;

/// Order in which the output states receive their mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// One full Gray code, one sharing step per layer.
    Simplified,
    /// Several partial Gray codes stepped in parallel.
    Overlaid,
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplified" => Ok(Self::Simplified),
            "overlaid" => Ok(Self::Overlaid),
            other => Err(Error::InvalidArgument(format!("unknown schedule {other:?}"))),
        }
    }
}

/// Mass at `from` moves to `from ^ (1 << bit)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Move {
    from: usize,
    bit: usize,
}

/// Moves of one subsection, layer by layer, over the `s` output bits.
#[derive(Clone, Debug)]
struct Program {
    s: usize,
    layers: Vec<Vec<Move>>,
}

/// `b` with `s = 2^(b-1) + b`, if any.
pub fn overlay_b(s: usize) -> Option<usize> {
    (1..32).find(|&b| (1usize << (b - 1)) + b == s)
}

fn program(s: usize, schedule: Schedule) -> Result<Program> {
    let layers = match schedule {
        Schedule::Simplified => {
            let code = sharing_code(s)?;
            (0..code.len() - 1)
                .map(|t| vec![Move { from: enc(&code.entries[t]), bit: code.switched_bit(t) }])
                .collect()
        }
        Schedule::Overlaid => {
            let b = overlay_b(s).ok_or_else(|| {
                Error::InvalidArgument(format!("the overlaid schedule needs s = 2^(b-1) + b, got s = {s}"))
            })?;
            let set = partial_codes(s, b)?;
            let start = BitVec::one_hot(s, 0);
            if !set.initial_states().contains(&&start) {
                return Err(Error::InvalidArgument("partial codes must start at (1, 0, ..., 0)".into()));
            }
            let face = face_code(&start, &set.free_positions());
            let mut layers: Vec<Vec<Move>> = (0..face.len() - 1)
                .map(|t| vec![Move { from: enc(&face.entries[t]), bit: face.switched_bit(t) }])
                .collect();
            for k in 0..set.code_len() - 1 {
                layers.push(
                    (0..set.codes.len())
                        .map(|i| Move { from: enc(&set.codes[i][k]), bit: set.switched_bit(i, k) })
                        .collect(),
                );
            }
            layers
        }
    };
    let prog = Program { s, layers };
    prog.check()?;
    Ok(prog)
}

fn enc(v: &BitVec) -> usize {
    crate::bitspace::dec(v) as usize
}

impl Program {
    /// Every move leaves an occupied state for a fresh one, moves sharing a
    /// bit come in Hamming-adjacent pairs, and all states get visited.
    fn check(&self) -> Result<()> {
        let mut seen = vec![false; 1 << self.s];
        seen[1] = true;
        for moves in &self.layers {
            let mut fresh = Vec::new();
            for mv in moves {
                let to = mv.from ^ (1 << mv.bit);
                if !seen[mv.from] || seen[to] || fresh.contains(&to) {
                    return Err(Error::InvalidArgument("schedule does not form a sharing tree".into()));
                }
                let partners = moves.iter().filter(|o| o.bit == mv.bit && o.from != mv.from).count();
                if partners > 1 {
                    return Err(Error::InvalidArgument("more than two states switch the same bit".into()));
                }
                if let Some(o) = moves.iter().find(|o| o.bit == mv.bit && o.from != mv.from) {
                    if (o.from ^ mv.from).count_ones() != 1 {
                        return Err(Error::InvalidArgument("states switching the same bit are not adjacent".into()));
                    }
                }
                fresh.push(to);
            }
            for t in fresh {
                seen[t] = true;
            }
        }
        if seen.iter().any(|v| !v) {
            return Err(Error::InvalidArgument("schedule misses some output states".into()));
        }
        Ok(())
    }

    /// Probability of moving for every move, so that the final state has distribution `row`.
    fn move_probs(&self, row: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut acc = row.to_vec();
        let mut out: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; l.len()]).collect();
        for (li, moves) in self.layers.iter().enumerate().rev() {
            for (mi, mv) in moves.iter().enumerate() {
                let to = mv.from ^ (1 << mv.bit);
                out[li][mi] = stick_break(&[acc[mv.from], acc[to]])?[0];
                acc[mv.from] += acc[to];
            }
        }
        Ok(out)
    }
}

/// Probability that unit `bit` is 1 in state `from` when moving with probability `rho`.
fn unit_one_prob(mv: Move, rho: f64, eps: f64) -> f64 {
    let p = if (mv.from >> mv.bit) & 1 == 0 { rho } else { 1.0 - rho };
    p.clamp(eps, 1.0 - eps)
}

/// Builds the deep network for `target` with shape coefficient `j`.
///
/// The target is first clamped into `[eps, 1 - eps]`. With `j = d` the first
/// sharing step is folded into the gate layer, saving one layer.
pub fn build_deep(target: &Kernel, j: usize, eps: f64, schedule: Schedule) -> Result<Network> {
    build_deep_with_steps(target, j, eps, schedule).map(|(net, _)| net)
}

/// [`build_deep`] that also returns every sharing step placed in the hidden
/// layers (block-local states, with `layer` the index into the network).
pub fn build_deep_with_steps(target: &Kernel, j: usize, eps: f64, schedule: Schedule) -> Result<(Network, Vec<SharingStep>)> {
    let (d, s) = (target.d(), target.s());
    if j > d {
        return Err(Error::InvalidArgument(format!("j = {j} exceeds d = {d}")));
    }
    if s == 0 {
        return Err(Error::InvalidArgument("need at least one output bit".into()));
    }
    let gamma = gain(eps)?;
    let target = clamp_to_eps(target, eps)?;
    let prog = program(s, schedule)?;
    let m = s + d - j;
    let blocks = 1usize << j;
    let width = blocks * m;

    let mut layers = Vec::new();
    let mut steps = Vec::new();
    for q in 0..1usize << (d - j) {
        let tail = bin(q as u64, d - j)?;
        let probs: Vec<Vec<Vec<f64>>> = (0..blocks)
            .map(|t| prog.move_probs(target.row(t + (q << j))))
            .collect::<Result<_>>()?;
        let mut first_layer = 0;
        if q == 0 && j == d {
            let [mv] = prog.layers[0][..] else {
                return Err(Error::InvalidArgument("first step must be a single move".into()));
            };
            let logits: Vec<f64> = (0..blocks)
                .map(|t| logit(unit_one_prob(mv, probs[t][0][0], eps)))
                .collect::<Result<_>>()?;
            layers.push(gate_layer_with(d, s, j, eps, Some((mv.bit, &logits)))?);
            first_layer = 1;
        } else if q == 0 {
            layers.push(gate_layer(d, s, j, eps)?);
        } else {
            layers.push(copy_layer(width, eps)?);
        }
        for (li, moves) in prog.layers.iter().enumerate().skip(first_layer) {
            let mut layer = copy_layer(width, eps)?;
            let index = layers.len();
            for t in 0..blocks {
                let mut done = vec![false; moves.len()];
                for (mi, &mv) in moves.iter().enumerate() {
                    if done[mi] {
                        continue;
                    }
                    done[mi] = true;
                    let g = bin(mv.from as u64, s)?.concat(&tail);
                    let rho = unit_one_prob(mv, probs[t][li][mi], eps);
                    let partner = moves.iter().enumerate().find(|(oi, o)| *oi != mi && o.bit == mv.bit);
                    let step = match partner {
                        Some((oi, &o)) => {
                            done[oi] = true;
                            SharingStep {
                                layer: index,
                                g,
                                g_hat: bin(o.from as u64, s)?.concat(&tail),
                                i: mv.bit,
                                rho,
                                rho_hat: Some(unit_one_prob(o, probs[t][li][oi], eps)),
                            }
                        }
                        None => {
                            let jb = usize::from(mv.bit == 0);
                            SharingStep { layer: index, g_hat: g.flipped(jb), g, i: mv.bit, rho, rho_hat: None }
                        }
                    };
                    check_step(m, &step, eps)?;
                    write_sharing(&mut layer, t * m, m, &step, gamma)?;
                    steps.push(step);
                }
            }
            layers.push(layer);
        }
    }
    layers.push(or_output_layer(d, s, j, eps)?);
    Ok((Network::new(d, layers)?, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::error_bound;
    use crate::netcore::network_kernel;
    use crate::verify::{max_abs_error, random_kernel};
    use approx::assert_abs_diff_eq;

    #[test]
    fn overlay_b_values() {
        assert_eq!(overlay_b(2), Some(1));
        assert_eq!(overlay_b(4), Some(2));
        assert_eq!(overlay_b(7), Some(3));
        assert_eq!(overlay_b(3), None);
        assert_eq!(overlay_b(1), None);
    }

    #[test]
    fn programs_cover_all_states() {
        for s in 1..=5 {
            let p = program(s, Schedule::Simplified).unwrap();
            assert_eq!(p.layers.len(), (1 << s) - 1);
        }
        assert_eq!(program(2, Schedule::Overlaid).unwrap().layers.len(), 2);
        assert_eq!(program(4, Schedule::Overlaid).unwrap().layers.len(), 3 + 3);
        assert!(program(3, Schedule::Overlaid).is_err());
    }

    #[test]
    fn move_probs_reproduce_target() {
        let row = [0.1, 0.2, 0.3, 0.4];
        for sched in [Schedule::Simplified, Schedule::Overlaid] {
            let p = program(2, sched).unwrap();
            let probs = p.move_probs(&row).unwrap();
            let mut mass = [0.0; 4];
            mass[1] = 1.0;
            for (moves, pr) in p.layers.iter().zip(&probs) {
                let before = mass;
                for (mv, &r) in moves.iter().zip(pr) {
                    mass[mv.from ^ (1 << mv.bit)] += r * before[mv.from];
                    mass[mv.from] -= r * before[mv.from];
                }
            }
            for (a, b) in mass.iter().zip(row) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn fig7_shape_and_error() {
        let target = Kernel::uniform(1, 2);
        let net = build_deep(&target, 0, 1e-3, Schedule::Simplified).unwrap();
        assert_eq!(net.hidden_widths(), vec![3; 8]);
        assert_eq!(net.unit_count(), 26);
        let err = max_abs_error(&network_kernel(&net).unwrap(), &target).unwrap();
        assert!(err < 0.02, "{err}");
    }

    #[test]
    fn two_by_two_omega() {
        let eps = 0.025;
        let target = clamp_to_eps(&random_kernel(2, 2, 17), eps).unwrap();
        let net = build_deep(&target, 2, eps, Schedule::Overlaid).unwrap();
        assert_eq!(net.hidden_widths(), vec![8, 8]);
        let w2 = &net.layers()[1];
        for x in 0..4 {
            // columns (0,0),(1,0),(0,1),(1,1) by dec are 0,1,2,3
            let p = target.row(x);
            let l = |v: f64| logit(v).unwrap();
            let omega = l(p[3] / (p[2] + p[3])) - l(p[1] / (p[0] + p[1]));
            assert_abs_diff_eq!(w2.weight(2 * x, 2 * x + 1), omega, epsilon = 1e-9);
        }
    }

    #[test]
    fn uniform_target_has_zero_omega() {
        let net = build_deep(&Kernel::uniform(2, 2), 2, 0.01, Schedule::Overlaid).unwrap();
        for x in 0..4 {
            assert_abs_diff_eq!(net.layers()[1].weight(2 * x, 2 * x + 1), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn all_shapes_within_bound() {
        for (d, s) in [(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2), (0, 3), (1, 3)] {
            for j in 0..=d {
                for sched in [Schedule::Simplified, Schedule::Overlaid] {
                    if sched == Schedule::Overlaid && overlay_b(s).is_none() {
                        continue;
                    }
                    for eps in [0.1, 0.01] {
                        if eps >= 1.0 / (1 << s) as f64 {
                            continue;
                        }
                        let target = clamp_to_eps(&random_kernel(d, s, 3), eps).unwrap();
                        let net = build_deep(&target, j, eps, sched).unwrap();
                        let err = max_abs_error(&network_kernel(&net).unwrap(), &target).unwrap();
                        let bound = error_bound(eps, net.unit_count()).unwrap();
                        assert!(err <= bound, "d={d} s={s} j={j} {sched:?} eps={eps}: {err} > {bound}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_deep(&Kernel::uniform(1, 2), 2, 0.01, Schedule::Simplified).is_err());
        assert!(build_deep(&Kernel::uniform(1, 3), 0, 0.01, Schedule::Overlaid).is_err());
        assert!(build_deep(&Kernel::uniform(1, 2), 0, 0.3, Schedule::Simplified).is_err());
    }
}
