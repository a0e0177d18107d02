//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always show in `cargo test`
//! output. The process fails when any hard requirement fails: exactness,
//! error bounds, counts and validators. Empirical thresholds (the published
//! sampled averages, the 0.02 target at eps = 1e-3) are reported as FAIL when
//! missed but do not fail the run; see the README for the measured gaps.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbnet::bitspace::{partial_codes, sharing_code, validate_partial_codes, PartialCodeSet};
use sbnet::construct::{
    alpha_for_eps, build_deep, error_bound, overlay_b, plan, validate_arch, Schedule, Variant, DEFAULT_SCALE,
};
use sbnet::netcore::{mutual_information, network_kernel, network_kernel_bruteforce, Layer, Network};
use sbnet::verify::{clamp_to_eps, convergence_sweep, random_kernel, table8, Arch, Mode, TABLE8_EPS};

const ALPHA_REF: [f64; 5] = [14.65, 17.47, 20.28, 23.06, 25.84];
const BOUND_REF: [f64; 5] = [0.4160, 0.2276, 0.1192, 0.0610, 0.0308];
const E_AVG_REF: [f64; 5] = [0.0522, 0.0248, 0.0134, 0.0077, 0.0060];

struct Outcome {
    /// Whole criterion met.
    pass: bool,
    /// Part of the criterion that must hold for the run to succeed.
    hard: bool,
    detail: String,
}

impl Outcome {
    fn strict(pass: bool, detail: String) -> Self {
        Self { pass, hard: pass, detail }
    }
}

fn random_layer(rng: &mut ChaCha8Rng, n_in: usize, n_out: usize, scale: f64) -> Layer {
    let w = (0..n_out).map(|_| (0..n_in).map(|_| rng.random_range(-scale..scale)).collect()).collect();
    let b = (0..n_out).map(|_| rng.random_range(-scale..scale)).collect();
    Layer::new(w, b).unwrap()
}

fn random_network(rng: &mut ChaCha8Rng, d: usize, widths: &[usize], s: usize) -> Network {
    let mut sizes = vec![d];
    sizes.extend_from_slice(widths);
    sizes.push(s);
    let layers = sizes.windows(2).map(|w| random_layer(rng, w[0], w[1], 3.0)).collect();
    Network::new(d, layers).unwrap()
}

fn criterion_1() -> Outcome {
    let mut worst_alpha = 0.0f64;
    let mut worst_bound = 0.0f64;
    for (k, &eps) in TABLE8_EPS.iter().enumerate() {
        worst_alpha = worst_alpha.max((alpha_for_eps(eps, 2).unwrap() - ALPHA_REF[k]).abs());
        worst_bound = worst_bound.max((error_bound(eps, 18).unwrap() - BOUND_REF[k]).abs());
    }
    Outcome::strict(
        worst_alpha <= 0.01 && worst_bound <= 5e-4,
        format!("max |alpha - ref| = {worst_alpha:.4}, max |bound - ref| = {worst_bound:.5}"),
    )
}

fn criterion_2() -> Outcome {
    let rows = table8(500, &TABLE8_EPS, 7, Mode::Exact, 0).unwrap();
    let hard = rows.iter().all(|r| r.e_max <= r.bound);
    let avg_ok: Vec<bool> = rows.iter().zip(E_AVG_REF).map(|(r, e)| r.e_avg <= e + 0.01).collect();
    let cols: Vec<String> = rows
        .iter()
        .zip(&avg_ok)
        .map(|(r, ok)| format!("{}: avg {:.4} max {:.4} bound {:.4}{}", r.eps, r.e_avg, r.e_max, r.bound, if *ok { "" } else { " (avg over ref + 0.01)" }))
        .collect();
    Outcome { pass: hard && avg_ok.iter().all(|&b| b), hard, detail: cols.join("; ") }
}

fn criterion_3() -> Outcome {
    let rows = table8(500, &TABLE8_EPS, 7, Mode::Sampled, 25_000).unwrap();
    let hard = rows.iter().all(|r| r.e_avg.is_finite() && r.samples_per_input == Some(25_000));
    let within: Vec<bool> = rows.iter().zip(E_AVG_REF).map(|(r, e)| (r.e_avg - e).abs() <= 0.02).collect();
    let cols: Vec<String> = rows
        .iter()
        .zip(E_AVG_REF)
        .map(|(r, e)| format!("{}: avg {:.4} vs {e}", r.eps, r.e_avg))
        .collect();
    Outcome { pass: hard && within.iter().all(|&b| b), hard, detail: cols.join("; ") }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_diff = 0.0f64;
    let mut worst_row = 0.0f64;
    let n = 150;
    for _ in 0..n {
        let d = rng.random_range(0..=3);
        let s = rng.random_range(1..=3);
        let depth = rng.random_range(1..=3);
        let mut budget = 12usize;
        let mut widths = Vec::new();
        for l in 0..depth {
            let left = depth - l - 1;
            let w = rng.random_range(1..=(budget - left).min(6));
            budget -= w;
            widths.push(w);
        }
        let net = random_network(&mut rng, d, &widths, s);
        let fast = network_kernel(&net).unwrap();
        let slow = network_kernel_bruteforce(&net).unwrap();
        for (a, b) in fast.rows().iter().zip(slow.rows()) {
            for (x, y) in a.iter().zip(b) {
                worst_diff = worst_diff.max((x - y).abs());
            }
            worst_row = worst_row.max((a.iter().sum::<f64>() - 1.0).abs());
        }
    }
    Outcome::strict(
        worst_diff <= 1e-12 && worst_row <= 1e-12,
        format!("{n} networks, max entry diff {worst_diff:.2e}, max row defect {worst_row:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let eps_list = [1e-1, 1e-2, 1e-3];
    let mut archs: Vec<(usize, usize, Arch)> = Vec::new();
    for d in 0..=2 {
        for s in 1..=2 {
            for j in 0..=d {
                archs.push((d, s, Arch::Deep { j, schedule: Schedule::Simplified }));
                if overlay_b(s).is_some() {
                    archs.push((d, s, Arch::Deep { j, schedule: Schedule::Overlaid }));
                }
            }
        }
    }
    for d in 0..=2 {
        for s in 1..=3 {
            archs.push((d, s, Arch::ShallowFixed { scale: DEFAULT_SCALE }));
            if s >= 2 {
                archs.push((d, s, Arch::ShallowTrainable { scale: DEFAULT_SCALE, variant: Variant::default_for(d) }));
            }
        }
    }
    let mut over_bound = Vec::new();
    let mut over_small = std::collections::BTreeSet::new();
    let mut worst_small = 0.0f64;
    for (ai, &(d, s, arch)) in archs.iter().enumerate() {
        for t in 0..50u64 {
            let target = random_kernel(d, s, 1000 * ai as u64 + t);
            let sweep = convergence_sweep(&target, arch, &eps_list).unwrap();
            if sweep.iter().any(|p| p.error > p.bound) {
                over_bound.push(format!("{arch:?} d={d} s={s} trial {t}"));
            }
            worst_small = worst_small.max(sweep[2].error);
            if sweep[2].error >= 0.02 {
                over_small.insert(format!("{arch:?} d={d} s={s} ({} units)", sweep[2].n_units));
            }
        }
    }
    let hard = over_bound.is_empty();
    let mut detail = format!(
        "{} architectures x 50 targets, {} over the bound, worst error at 1e-3 = {worst_small:.5}",
        archs.len(),
        over_bound.len()
    );
    if !hard {
        detail += &format!(" (first: {})", over_bound[0]);
    }
    if !over_small.is_empty() {
        detail += &format!("; at or above 0.02 at 1e-3: {}", over_small.into_iter().collect::<Vec<_>>().join(", "));
    }
    Outcome { pass: hard && worst_small < 0.02, hard, detail }
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (d, s) in [(1usize, 2usize), (2, 2)] {
        for j in 0..=d {
            for schedule in [Schedule::Simplified, Schedule::Overlaid] {
                let a = clamp_to_eps(&random_kernel(d, s, 61), 0.01).unwrap();
                let b = clamp_to_eps(&random_kernel(d, s, 62), 0.01).unwrap();
                let na = build_deep(&a, j, 0.01, schedule).unwrap();
                let nb = build_deep(&b, j, 0.01, schedule).unwrap();
                let changed = na.params().iter().zip(nb.params()).filter(|(x, y)| *x != y).count();
                let expected = (1 << d) * ((1 << s) - 1);
                let planned = plan(d, s, j).unwrap().trainable_params;
                ok &= changed == expected && planned == expected;
                lines.push(format!("d={d} s={s} j={j} {schedule:?}: {changed}/{expected}"));
            }
        }
    }
    Outcome::strict(ok, lines.join(", "))
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    for s in 1..=10 {
        let c = sharing_code(s).unwrap();
        let first_ok = c.entries[0].get(0) == 1 && c.entries[0].count_ones() == 1;
        let last_ok = c.entries.last().unwrap().count_ones() == 0;
        ok &= c.len() == 1 << s && c.is_full() && c.is_adjacent_chain() && first_ok && last_ok;
    }
    let two_bit = validate_partial_codes(&PartialCodeSet::two_bit()).all_pass();
    let mut searched = Vec::new();
    for (m, b) in [(2usize, 1usize), (4, 2)] {
        let set = partial_codes(m, b).unwrap();
        searched.push((m, b, validate_partial_codes(&set).all_pass()));
    }
    let searched_ok = searched.iter().all(|x| x.2);
    Outcome::strict(
        ok && two_bit && searched_ok,
        format!("sharing codes s<=10: {ok}, two-bit pair: {two_bit}, searched {searched:?}"),
    )
}

fn criterion_8() -> Outcome {
    let fig = validate_arch(1, 4, &[5, 3], None);
    let p = plan(2, 2, 2).unwrap();
    let small = validate_arch(2, 2, &vec![p.width; p.depth_theorem3.unwrap()], None);
    let tight = validate_arch(1, 4, &[4, 4], Some(29));
    let exact = validate_arch(1, 4, &[4, 4], Some(30));
    Outcome::strict(
        !fig.passed && small.passed && !tight.passed && exact.passed,
        format!(
            "1-5-3-4 flagged: {}, two-bit deep net accepted: {}, 29 params flagged: {}, 30 accepted: {}",
            !fig.passed, small.passed, !tight.passed, exact.passed
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=4);
        let s = rng.random_range(1..=4);
        let before = rng.random_range(0..=2);
        let after = rng.random_range(0..=2);
        let mut widths: Vec<usize> = (0..before).map(|_| rng.random_range(1..=4)).collect();
        widths.push(1);
        widths.extend((0..after).map(|_| rng.random_range(1..=4)));
        let net = random_network(&mut rng, d, &widths, s);
        let uniform = vec![1.0 / (1 << d) as f64; 1 << d];
        let joint = network_kernel(&net).unwrap().joint(&uniform).unwrap();
        worst = worst.max(mutual_information(&joint).unwrap());
    }
    Outcome::strict(worst <= 1.0 + 1e-9, format!("100 networks, max MI {worst:.6} bits"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("analytic alpha and bound columns", criterion_1),
        ("two-bit experiment, exact", criterion_2),
        ("two-bit experiment, sampled", criterion_3),
        ("fast kernel matches brute force", criterion_4),
        ("construction soundness sweep", criterion_5),
        ("trainable parameter count", criterion_6),
        ("schedule properties", criterion_7),
        ("lower-bound validators", criterion_8),
        ("bottleneck mutual information", criterion_9),
    ];
    let mut hard_failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {tag}: {name} [{:.1}s] {}", k + 1, start.elapsed().as_secs_f64(), o.detail);
        if !o.hard {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} criteria failed a hard requirement");
        std::process::exit(1);
    }
}
