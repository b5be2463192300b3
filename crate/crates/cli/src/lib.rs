//! Subcommand dispatch and report envelopes for the `intrinsic` binary.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use intrinsic::arith::parse_rat;
use intrinsic::asymptotics::Outcome;
use intrinsic::empirical::{build_cover, estimate_dimension, tail_sum, EpsRule, RadiusMode};
use intrinsic::variety::point_heights;
use intrinsic::{
    classical_verdict, dimension_formula, parse_system, series_verdict, ApproxFunction, DimFunction, Domain,
    Error, Rat, RatVec, SystemDescriptor,
};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SUBCOMMANDS: [&str; 10] = [
    "morphism-check",
    "heights",
    "height-bounds",
    "verdict",
    "classical-verdict",
    "dimension",
    "estimate-dim",
    "tail-sum",
    "check-intrinsic",
    "cover",
];

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "INTRINSIC_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 usage, 3 parse, 4 hypotheses not applicable, 5 refusal, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                Error::Parse { .. }
                | Error::NonIntegerCoefficient { .. }
                | Error::VarCountMismatch { .. }
                | Error::NonIntegralSystem(_) => 3,
                Error::NotApplicable(_) => 4,
                Error::Refused(_) => 5,
                _ => 1,
            },
            CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, clap::Args)]
pub struct Flags {
    /// Polynomial P_j in x1..xn (repeatable).
    #[arg(long = "poly")]
    pub polys: Vec<String>,
    /// System file: JSON descriptor, or polynomials separated by ';' or newlines.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Number of variables.
    #[arg(long)]
    pub n: Option<usize>,
    /// Degree; derived from the system when one is given.
    #[arg(long)]
    pub d: Option<u32>,
    /// Box side per coordinate as `lo,hi` (repeatable, default [0, 1]).
    #[arg(long = "box")]
    pub domain: Vec<String>,
    /// psi(r) = c r^-tau log(e+r)^-beta
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// f(r) = r^s log(1/r)^gamma
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// Rational point such as `3/4,5/6`.
    #[arg(long)]
    pub point: Option<String>,
    #[arg(long)]
    pub q_min: Option<i64>,
    #[arg(long)]
    pub q_max: Option<i64>,
    #[arg(long)]
    pub q_lo: Option<i64>,
    #[arg(long)]
    pub q_hi: Option<i64>,
    /// Lower end N of a tail window (N, Q].
    #[arg(long)]
    pub n_lo: Option<i64>,
    /// Stage levels Q, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<i64>,
    /// Grid sides, comma-separated; one per level for estimate-dim.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<String>,
    #[arg(long)]
    pub d_max: Option<i64>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Number of random points for `heights`.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Parser)]
#[command(name = "intrinsic", version, about = "Intrinsic Diophantine approximation on polynomial graphs")]
pub struct Cli {
    /// One of: morphism-check, heights, height-bounds, verdict, classical-verdict,
    /// dimension, estimate-dim, tail-sum, check-intrinsic, cover
    pub command: String,
    #[command(flatten)]
    pub flags: Flags,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub command: String,
    /// SHA-256 of the command, canonical system and flags.
    pub input_digest: String,
    pub tool_version: String,
    pub timestamp: String,
    pub payload: Value,
    /// Tabular rendering, when the payload has one.
    #[serde(skip)]
    pub csv: Option<String>,
    /// Exit status to report even though a payload was produced.
    #[serde(skip)]
    pub status: u8,
}

impl ReportEnvelope {
    pub fn payload_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.payload).expect("payload serializes")
    }
}

fn rat(name: &str, v: &Option<String>) -> CliResult<Option<Rat>> {
    v.as_deref()
        .map(|s| parse_rat(s).map_err(|e| CliError::Usage(format!("--{name}: {e}"))))
        .transpose()
}

fn require<T: Clone>(name: &str, v: &Option<T>) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::Usage(format!("--{name} is required")))
}

/// Reads the system from `--poly`/`--system`, if any.
pub fn load_system(flags: &Flags) -> CliResult<Option<SystemDescriptor>> {
    if !flags.polys.is_empty() && flags.system.is_some() {
        return Err(CliError::Usage("--poly and --system are mutually exclusive".into()));
    }
    let desc = if let Some(path) = &flags.system {
        let text = fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            let desc = SystemDescriptor::from_json(&text)?;
            if flags.n.is_some_and(|n| n != desc.n) {
                return Err(CliError::Usage(format!("--n conflicts with n = {} in {}", desc.n, path.display())));
            }
            desc
        } else {
            parse_system(&text, flags.n)?
        }
    } else if !flags.polys.is_empty() {
        parse_system(&flags.polys.join(";"), flags.n)?
    } else {
        if !flags.domain.is_empty() {
            return Err(CliError::Usage("--box given without a system".into()));
        }
        return Ok(None);
    };
    let desc = if flags.domain.is_empty() {
        desc
    } else {
        if flags.domain.len() != desc.n {
            return Err(CliError::Usage(format!("{} --box sides for n = {}", flags.domain.len(), desc.n)));
        }
        let sides = flags
            .domain
            .iter()
            .map(|s| {
                let (a, b) = s
                    .split_once(',')
                    .ok_or_else(|| CliError::Usage(format!("--box {s}: expected lo,hi")))?;
                Ok((parse_rat(a.trim())?, parse_rat(b.trim())?))
            })
            .collect::<CliResult<Vec<_>>>()?;
        desc.with_domain(Domain::new(sides)?)?
    };
    Ok(Some(desc))
}

fn psi_of(flags: &Flags) -> CliResult<ApproxFunction> {
    let tau = rat("tau", &flags.tau)?.ok_or_else(|| CliError::Usage("--tau is required".into()))?;
    let c = rat("c", &flags.c)?.unwrap_or_else(|| Rat::from_integer(1.into()));
    let beta = rat("beta", &flags.beta)?.unwrap_or_else(|| Rat::from_integer(0.into()));
    Ok(ApproxFunction::power_log(c, tau, beta)?)
}

fn f_of(flags: &Flags) -> CliResult<DimFunction> {
    let s = rat("s", &flags.s)?.ok_or_else(|| CliError::Usage("--s is required".into()))?;
    let gamma = rat("gamma", &flags.gamma)?.unwrap_or_else(|| Rat::from_integer(0.into()));
    Ok(DimFunction::new(s, gamma)?)
}

/// `(n, d)` from the system, or from `--n`/`--d` when no system is given.
fn n_and_d(flags: &Flags, desc: Option<&SystemDescriptor>) -> CliResult<(u32, u32)> {
    match desc {
        Some(desc) => {
            let ctx = desc.to_context()?;
            let (n, d) = (ctx.n() as u32, ctx.d());
            if flags.d.is_some_and(|x| x != d) {
                return Err(CliError::Usage(format!("--d conflicts with system degree {d}")));
            }
            Ok((n, d))
        }
        None => Ok((require("n", &flags.n)? as u32, require("d", &flags.d)?)),
    }
}

fn need_system(desc: Option<SystemDescriptor>) -> CliResult<SystemDescriptor> {
    desc.ok_or_else(|| CliError::Usage("a system is required (--poly or --system)".into()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn input_digest(name: &str, desc: Option<&SystemDescriptor>, flags: &Flags) -> String {
    let canonical = json!({
        "command": name,
        "system": desc.map(|d| json!({
            "n": d.n,
            "polys": d.canonical_text(),
            "box": d.domain.to_string(),
        })),
        "flags": flags,
    });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

/// Runs one subcommand and wraps its payload.
pub fn run_subcommand(name: &str, desc: Option<SystemDescriptor>, flags: &Flags) -> CliResult<ReportEnvelope> {
    if !SUBCOMMANDS.contains(&name) {
        return Err(CliError::Usage(format!(
            "unknown subcommand '{name}'; expected one of {}",
            SUBCOMMANDS.join(", ")
        )));
    }
    let digest = input_digest(name, desc.as_ref(), flags);
    let mut csv = None;
    let mut status = 0;
    let payload = match name {
        "morphism-check" => {
            let ctx = need_system(desc)?.to_context()?;
            ctx.morphism().to_json()
        }
        "heights" => heights(desc, flags)?,
        "height-bounds" => {
            let ctx = need_system(desc)?.to_context()?;
            let q_max = flags.q_max.unwrap_or(100);
            let q_min = flags.q_min.unwrap_or(1);
            if q_min < 1 || q_min > q_max {
                return Err(CliError::Usage(format!("need 1 <= q-min <= q-max, got {q_min}..{q_max}")));
            }
            let rep = ctx.height_bound_scan_range(q_min..=q_max);
            csv = Some(rep.to_csv());
            to_value(&rep)
        }
        "verdict" | "classical-verdict" => {
            let psi = psi_of(flags)?;
            let f = f_of(flags)?;
            let v = if name == "verdict" {
                let (n, d) = n_and_d(flags, desc.as_ref())?;
                series_verdict(&psi, &f, n, d)
            } else {
                if flags.d.is_some_and(|d| d != 1) {
                    return Err(CliError::Usage("classical-verdict is for d = 1".into()));
                }
                let (n, _) = match desc.as_ref() {
                    Some(_) => n_and_d(flags, desc.as_ref())?,
                    None => (require("n", &flags.n)? as u32, 1),
                };
                classical_verdict(&psi, &f, n)
            };
            if v.outcome == Outcome::NotApplicable {
                status = 4;
            }
            to_value(&v)
        }
        "dimension" => {
            let (n, d) = n_and_d(flags, desc.as_ref())?;
            let tau = rat("tau", &flags.tau)?.ok_or_else(|| CliError::Usage("--tau is required".into()))?;
            to_value(&dimension_formula(n, d, &tau)?)
        }
        "estimate-dim" => {
            let ctx = need_system(desc)?.to_context()?;
            let tau = rat("tau", &flags.tau)?.ok_or_else(|| CliError::Usage("--tau is required".into()))?;
            let levels = if flags.levels.is_empty() {
                vec![32, 64, 128, 256]
            } else {
                flags.levels.clone()
            };
            let eps = if flags.eps.is_empty() {
                EpsRule::SmallestRadius
            } else {
                EpsRule::Explicit(flags.eps.iter().map(|e| parse_rat(e)).collect::<Result<_, _>>()?)
            };
            let est = estimate_dimension(&ctx, &tau, &levels, &eps)?;
            csv = Some(est.to_csv());
            est.summary_json()
        }
        "tail-sum" => {
            let ctx = need_system(desc)?.to_context()?;
            let q_hi = require("q-hi", &flags.q_hi)?;
            let n_lo = flags.n_lo.unwrap_or(q_hi / 2);
            let t = tail_sum::<f64>(&ctx, &psi_of(flags)?, &f_of(flags)?, n_lo, q_hi)?;
            to_value(&t)
        }
        "check-intrinsic" => {
            let ctx = need_system(desc)?.to_context()?;
            let d_max = flags.d_max.unwrap_or(50);
            let rep = ctx.off_manifold_check_with(&psi_of(flags)?, d_max, flags.depth.unwrap_or(20))?;
            csv = Some(rep.to_csv());
            to_value(&rep)
        }
        "cover" => {
            let ctx = need_system(desc)?.to_context()?;
            let q_hi = require("q-hi", &flags.q_hi)?;
            let q_lo = flags.q_lo.unwrap_or(q_hi / 2);
            let mode = match flags.mode.unwrap_or(Mode::Lower) {
                Mode::Lower => RadiusMode::Lower,
                Mode::Upper => RadiusMode::Upper,
            };
            let cover = build_cover(&ctx, &psi_of(flags)?, q_lo, q_hi, mode)?;
            match flags.eps.as_slice() {
                [] => to_value(&cover),
                [e] => {
                    let eps = parse_rat(e)?;
                    let cells = cover.count_cells(&ctx, &eps);
                    json!({ "cover": cover, "eps": e, "cells": cells.to_string() })
                }
                _ => return Err(CliError::Usage("cover takes a single --eps".into())),
            }
        }
        _ => unreachable!("checked above"),
    };
    Ok(ReportEnvelope {
        command: name.to_string(),
        input_digest: digest,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        payload,
        csv,
        status,
    })
}

fn heights(desc: Option<SystemDescriptor>, flags: &Flags) -> CliResult<Value> {
    let ctx = desc.as_ref().map(|d| d.to_context()).transpose()?;
    match (&flags.point, flags.sample) {
        (Some(_), Some(_)) => Err(CliError::Usage("--point and --sample are mutually exclusive".into())),
        (Some(p), None) => {
            let x: RatVec = p.parse()?;
            Ok(to_value(&point_heights(ctx.as_ref(), &x)?))
        }
        (None, Some(k)) => {
            let q_max = flags.q_max.unwrap_or(100);
            let seed = flags.seed.unwrap_or(0);
            let domain = match &ctx {
                Some(ctx) => ctx.domain().clone(),
                None => Domain::unit(require("n", &flags.n)?),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::with_capacity(k);
            while rows.len() < k {
                let q = rng.gen_range(1..=q_max);
                let ranges = domain.numerator_ranges(q);
                if ranges.iter().any(|(lo, hi)| lo > hi) {
                    continue;
                }
                let num: Vec<BigInt> = ranges.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi).into()).collect();
                let x = RatVec::from_fraction(&num, &BigInt::from(q))?;
                rows.push(to_value(&point_heights(ctx.as_ref(), &x)?));
            }
            Ok(json!({ "seed": seed, "q_max": q_max, "points": rows }))
        }
        (None, None) => Err(CliError::Usage("--point or --sample is required".into())),
    }
}

/// Sets the global worker count from the environment, once.
pub fn configure_workers() {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("{WORKERS_ENV} ignored: {e}");
        }
    }
}

/// Full CLI run: dispatch, render and write. Returns the exit status.
pub fn execute(cli: &Cli) -> CliResult<u8> {
    configure_workers();
    let desc = load_system(&cli.flags)?;
    let env = run_subcommand(&cli.command, desc, &cli.flags)?;
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&env).expect("envelope serializes");
            s.push('\n');
            s
        }
        Format::Csv => env
            .csv
            .clone()
            .ok_or_else(|| CliError::Usage(format!("{} has no CSV form", cli.command)))?,
    };
    match &cli.output {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(env.status)
}
