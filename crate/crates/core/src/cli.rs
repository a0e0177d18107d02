//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check fails (`verify` over the bound,
//! `validate-arch` flags a rule), 2 on malformed input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bitspace::{partial_codes, sharing_code, validate_partial_codes, BitVec};
use crate::construct::{
    build_deep, build_shallow_fixed, build_shallow_trainable, error_bound, plan, validate_arch, Schedule, Variant,
    DEFAULT_SCALE,
};
use crate::netcore::{network_kernel, sample, Kernel, Network};
use crate::verify::{clamp_to_eps, format_table, max_abs_error, table8, Mode, TABLE8_EPS};

const BIT_ORDER_NOTE: &str = "Bit strings are written first bit first and the first bit is the least \
significant: \"01\" is x = (0, 1), index 2. Kernel rows and columns follow ascending index.";

#[derive(Parser, Debug)]
#[command(name = "sbnet", version, about = "Sigmoid belief networks approximating binary Markov kernels", after_help = BIT_ORDER_NOTE)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ArchArg {
    ShallowFixed,
    ShallowTrainable,
    Deep,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Literal,
    Anchored,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleArg {
    Simplified,
    Overlaid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Architecture sizes for shape coefficient j.
    Plan {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        j: usize,
    },
    /// Synthesize a network approximating a target kernel.
    Construct {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum)]
        arch: ArchArg,
        /// Shape coefficient of the deep construction (default: d).
        #[arg(long)]
        j: Option<usize>,
        /// Shallow-trainable variant (default: anchored for d >= 1, literal for d = 0).
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// Deep schedule (default: simplified).
        #[arg(long, value_enum, default_value = "simplified")]
        schedule: ScheduleArg,
        #[arg(long)]
        eps: f64,
        /// Read-out gain of the shallow constructions.
        #[arg(long, default_value_t = DEFAULT_SCALE)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact kernel of a network.
    Eval {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ancestral samples of the output for one input.
    #[command(after_help = BIT_ORDER_NOTE)]
    Sample {
        #[arg(long)]
        network: PathBuf,
        /// Input bits, first bit first (e.g. "01").
        #[arg(long, default_value = "")]
        input: String,
        #[arg(long)]
        n: u64,
        #[arg(long, env = "SBN_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Exact error of a network against a target, and the error bound.
    Verify {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        eps: f64,
    },
    /// The two-bit experiment: j = d = 2 over random targets.
    Table8 {
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, env = "SBN_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        #[arg(long, default_value_t = 25_000)]
        samples: u64,
        /// Comma-separated eps values (default: 0.025 halved four times).
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Write the JSON rows here and print the text table to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sharing schedules as JSON arrays of bit arrays.
    Graycode {
        #[arg(long)]
        s: usize,
        /// Emit a partial code set on s bits instead of a full code.
        #[arg(long)]
        partial: bool,
        #[arg(long)]
        b: Option<usize>,
    },
    /// Lower-bound checks for an architecture.
    ValidateArch {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, value_delimiter = ',')]
        widths: Vec<usize>,
        #[arg(long)]
        params: Option<usize>,
    },
}

/// Failure with its exit code.
struct Failure(i32, String);

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure(2, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(2, e.to_string())
    }
}

/// Runs the CLI on `argv` (program name first) with the process streams.
pub fn run(argv: Vec<String>) -> i32 {
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// [`run`] writing to the given streams.
pub fn run_with(argv: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("value serializes")
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(2, format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, json: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, format!("{json}\n")).map_err(|e| Failure(2, format!("{}: {e}", p.display()))),
        None => writeln!(out, "{json}").map_err(Failure::from),
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Plan { d, s, j } => {
            writeln!(out, "{}", to_json(&plan(d, s, j)?))?;
        }
        Command::Construct { target, arch, j, variant, schedule, eps, scale, out: path } => {
            let target = Kernel::from_json(&read(&target)?)?;
            let net = match arch {
                ArchArg::Deep => {
                    let schedule = match schedule {
                        ScheduleArg::Simplified => Schedule::Simplified,
                        ScheduleArg::Overlaid => Schedule::Overlaid,
                    };
                    build_deep(&target, j.unwrap_or(target.d()), eps, schedule)?
                }
                ArchArg::ShallowFixed => build_shallow_fixed(&target, eps, scale)?,
                ArchArg::ShallowTrainable => {
                    let variant = match variant {
                        Some(VariantArg::Literal) => Variant::Literal,
                        Some(VariantArg::Anchored) => Variant::Anchored,
                        None => Variant::default_for(target.d()),
                    };
                    build_shallow_trainable(&target, eps, scale, variant)?
                }
            };
            emit(out, path.as_deref(), &net.to_json())?;
        }
        Command::Eval { network, out: path } => {
            let net = Network::from_json(&read(&network)?)?;
            emit(out, path.as_deref(), &network_kernel(&net)?.to_json())?;
        }
        Command::Sample { network, input, n, seed } => {
            let net = Network::from_json(&read(&network)?)?;
            let x = BitVec::parse(&input)?;
            let counts = sample(&net, &x, n, seed)?;
            #[derive(Serialize)]
            struct Counts<'a> {
                input: &'a str,
                n: u64,
                seed: u64,
                counts: Vec<u64>,
            }
            writeln!(out, "{}", to_json(&Counts { input: &input, n, seed, counts }))?;
        }
        Command::Verify { network, target, eps } => {
            let net = Network::from_json(&read(&network)?)?;
            let target = clamp_to_eps(&Kernel::from_json(&read(&target)?)?, eps)?;
            let error = max_abs_error(&network_kernel(&net)?, &target)?;
            let n = net.unit_count();
            let bound = error_bound(eps, n)?;
            #[derive(Serialize)]
            struct Report {
                error: f64,
                bound: f64,
                #[serde(rename = "N")]
                n: usize,
                ok: bool,
            }
            let ok = error <= bound;
            writeln!(out, "{}", to_json(&Report { error, bound, n, ok }))?;
            return Ok(if ok { 0 } else { 1 });
        }
        Command::Table8 { trials, seed, mode, samples, eps, out: path } => {
            let mode = match mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Sampled => Mode::Sampled,
            };
            let eps = if eps.is_empty() { TABLE8_EPS.to_vec() } else { eps };
            let rows = table8(trials, &eps, seed, mode, samples)?;
            let json = to_json(&rows);
            match path {
                Some(p) => {
                    emit(out, Some(&p), &json)?;
                    write!(out, "{}", format_table(&rows))?;
                }
                None => {
                    writeln!(out, "{json}")?;
                    write!(out, "{}", format_table(&rows))?;
                }
            }
        }
        Command::Graycode { s, partial, b } => {
            if partial {
                let b = b.ok_or_else(|| Failure(2, "--partial needs --b".into()))?;
                let set = partial_codes(s, b)?;
                if !validate_partial_codes(&set).all_pass() {
                    return Err(Failure(1, "generated partial codes failed validation".into()));
                }
                writeln!(out, "{}", to_json(&set.codes))?;
            } else {
                writeln!(out, "{}", to_json(&sharing_code(s)?))?;
            }
        }
        Command::ValidateArch { d, s, widths, params } => {
            let report = validate_arch(d, s, &widths, params);
            writeln!(out, "{}", to_json(&report))?;
            return Ok(if report.passed { 0 } else { 1 });
        }
    }
    Ok(0)
}
