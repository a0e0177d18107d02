//! Explicit weights for the shallow and deep universal approximators,
//! architecture planning and lower-bound checks.

mod chains;
mod deep;
mod layers;
mod shallow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chains::{invert_product_chain, invert_sharing_chain};
pub use deep::{build_deep, build_deep_with_steps, overlay_b, Schedule};
pub use layers::{
    copy_layer, edge_hyperplane, gain, gate_layer, or_output_layer, orthant_map_weights, sharing_layer, SharingStep,
    MAX_ORTHANT_BITS,
};
pub use shallow::{build_shallow_fixed, build_shallow_trainable, Variant, DEFAULT_SCALE};

/// Largest `d + s` accepted by [`plan`].
const PLAN_CAP: usize = 40;

/// Derived sizes of the deep and shallow architectures for `(d, s, j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchPlan {
    pub d: usize,
    pub s: usize,
    pub j: usize,
    /// `b` with `s = 2^(b-1) + b`, when it exists.
    pub b: Option<usize>,
    /// Hidden layers of the partial-code schedule.
    pub depth_theorem3: Option<usize>,
    /// Hidden layers of the single-Gray-code schedule.
    pub depth_simplified: usize,
    pub width: usize,
    /// Units excluding inputs, for the partial-code depth when defined.
    pub unit_count: usize,
    pub unit_count_simplified: usize,
    pub trainable_params: usize,
    /// Weights and biases of the fully connected network of the same shape.
    pub full_params: usize,
    pub shallow_fixed_width: usize,
    pub shallow_trainable_width: usize,
}

/// Sizes of the architectures with shape coefficient `j`.
pub fn plan(d: usize, s: usize, j: usize) -> Result<ArchPlan> {
    if j > d {
        return Err(Error::InvalidArgument(format!("j = {j} exceeds d = {d}")));
    }
    if s == 0 {
        return Err(Error::InvalidArgument("need s >= 1".into()));
    }
    if d + s > PLAN_CAP {
        return Err(Error::Capacity(format!("d + s = {} exceeds {PLAN_CAP}", d + s)));
    }
    let saved = usize::from(j == d);
    let b = overlay_b(s);
    let depth_theorem3 = b.map(|b| (1usize << (d - j)) * ((1usize << (s - b)) + (1usize << b) - 1) - saved);
    let depth_simplified = (1usize << (d + s - j)) - saved;
    let width = (1usize << j) * (s + d - j);
    let depth = depth_theorem3.unwrap_or(depth_simplified);
    Ok(ArchPlan {
        d,
        s,
        j,
        b,
        depth_theorem3,
        depth_simplified,
        width,
        unit_count: depth * width + s,
        unit_count_simplified: depth_simplified * width + s,
        trainable_params: (1usize << d) * ((1usize << s) - 1),
        full_params: full_params(d, &vec![width; depth], s),
        shallow_fixed_width: if d == 0 { (1usize << s) - 1 } else { (1usize << (d - 1)) * ((1usize << s) - 1) },
        shallow_trainable_width: (1usize << d) * ((1usize << (s - 1)) - 1),
    })
}

/// Weights plus biases of a fully connected `d -> widths -> s` network.
pub fn full_params(d: usize, hidden: &[usize], s: usize) -> usize {
    let mut prev = d;
    let mut total = 0;
    for &w in hidden.iter().chain(std::iter::once(&s)) {
        total += w * (prev + 1);
        prev = w;
    }
    total
}

/// `1 - (1 - eps)^N + 2 eps`.
pub fn error_bound(eps: f64, n: usize) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::OutOfRange(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need N >= 1".into()));
    }
    Ok(1.0 - (1.0 - eps).powi(n as i32) + 2.0 * eps)
}

/// Parameter magnitude `2 m logit(1 - eps)`.
pub fn alpha_for_eps(eps: f64, m: usize) -> Result<f64> {
    Ok(2.0 * m as f64 * gain(eps)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of the lower-bound checks for one architecture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub d: usize,
    pub s: usize,
    pub hidden_widths: Vec<usize>,
    pub params: usize,
    pub passed: bool,
    pub rules: Vec<RuleResult>,
}

/// Checks necessary conditions for a `d -> hidden_widths -> s` network to be
/// a universal approximator.
///
/// `param_count` defaults to the fully connected count. The last-layer rule
/// only applies when `s > d`.
pub fn validate_arch(d: usize, s: usize, hidden_widths: &[usize], param_count: Option<usize>) -> ValidationReport {
    let params = param_count.unwrap_or_else(|| full_params(d, hidden_widths, s));
    let needed = 1u128.checked_shl(d as u32).unwrap_or(u128::MAX).saturating_mul((1u128 << s.min(127)) - 1);
    let mut rules = vec![RuleResult {
        rule: "parameter_count".into(),
        pass: params as u128 >= needed,
        detail: format!("{params} parameters, at least {needed} required"),
    }];

    let min_w = d.min(s);
    let narrow: Vec<String> = hidden_widths
        .iter()
        .enumerate()
        .filter(|(_, &w)| w < min_w)
        .map(|(l, w)| format!("layer {} has {w}", l + 1))
        .collect();
    rules.push(RuleResult {
        rule: "min_width".into(),
        pass: narrow.is_empty(),
        detail: if narrow.is_empty() {
            format!("every hidden layer has at least {min_w} units")
        } else {
            format!("{} (need {min_w})", narrow.join(", "))
        },
    });

    let last_rule = match hidden_widths.last() {
        Some(&last) if s > d => {
            let need = if d == 0 && s.is_multiple_of(2) { s - 1 } else { s };
            RuleResult {
                rule: "last_width".into(),
                pass: last >= need,
                detail: format!("last hidden layer has {last} units, at least {need} required"),
            }
        }
        Some(_) => RuleResult { rule: "last_width".into(), pass: true, detail: "not applicable since s <= d".into() },
        None => RuleResult { rule: "last_width".into(), pass: true, detail: "no hidden layers".into() },
    };
    rules.push(last_rule);

    ValidationReport {
        d,
        s,
        hidden_widths: hidden_widths.to_vec(),
        params,
        passed: rules.iter().all(|r| r.pass),
        rules,
    }
}
