//! Command-line front end. `run` returns the process exit code:
//! 0 ok, 1 verification failed, 2 parse or usage error, 3 retries exhausted,
//! 4 infeasible parameters, 5 degenerate Bohr set.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::behrend::{apfree_set, is_apfree, low_ap_density_subset};
use crate::bohr::{upper_search, Schedule, UpperOptions};
use crate::error::{Error, Result};
use crate::group::{ap_profile, argmax, total_3ap_density, DensityFn, Kind, Norm};
use crate::interval::{choose_interval_params, construct_and_sample, construct_interval_fn, set_profile};
use crate::io::{read_artifact, profile_csv, to_json, write_text, Artifact, FunctionFile, Meta, ModelMeta, SetFile};
use crate::model::{build_model_fn, verify_model_properties};
use crate::product::{construct_product, Mode, ProductParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RETRIES: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Domain(_) | Error::Precondition(_) => EXIT_PARSE,
        Error::RetriesExhausted(_) => EXIT_RETRIES,
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Degenerate(_) => EXIT_DEGENERATE,
    }
}

#[derive(Parser, Debug)]
#[command(name = "popdiff", version, about = "Popular differences for 3-term progressions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every random choice; POPDIFF_SEED overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Desk)]
    mode: ModeArg,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    n: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    factors: Option<Vec<u64>>,
    /// Worker threads for scans (0: all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory; without it the main artifact goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Strict,
    Desk,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Strict => Mode::Strict,
            ModeArg::Desk => Mode::Desk,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Per-difference 3-AP densities of a function or set file.
    Scan {
        file: PathBuf,
        /// Interval normalization: divide by `n` or by `n - 2d`.
        #[arg(long, value_enum, default_value_t = IntervalNorm::OverLen)]
        interval_norm: IntervalNorm,
    },
    /// Build a function or set with its certificate.
    Construct {
        #[arg(value_enum)]
        kind: ConstructKind,
        /// Retry budget per randomized stage.
        #[arg(long, default_value_t = 8)]
        retries: usize,
        /// Interval only: sample a set from the construction as well.
        #[arg(long)]
        sample: bool,
        /// Sampling attempts.
        #[arg(long, default_value_t = 10)]
        attempts: usize,
    },
    /// Mean-cube increment search for a popular difference.
    Upper {
        file: PathBuf,
        /// Geometric desk schedule base (ρ_i = base·2^{-i}); strict mode uses the exact recursion.
        #[arg(long, default_value_t = 0.3)]
        rho_base: f64,
        /// Desk ν used for the final Bohr set.
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Add the frequency 1 to every frequency set.
        #[arg(long)]
        chi0: bool,
    },
    /// Exhaustive per-difference check against a bound.
    Verify {
        file: PathBuf,
        /// `relative`: α³(1-ε); `absolute`: α³-ε.
        #[arg(long, default_value = "relative")]
        bound: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum IntervalNorm {
    OverN,
    OverLen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ConstructKind {
    Model,
    Product,
    Interval,
    Behrend,
}

/// Parses `args` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Ctx {
    seed: u64,
    mode: Mode,
    common: Common,
}

fn execute(cli: Cli) -> Result<i32> {
    let seed = match std::env::var("POPDIFF_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| Error::Parse(format!("POPDIFF_SEED = {s:?} is not a u64")))?,
        Err(_) => cli.common.seed,
    };
    if cli.common.threads > 0 {
        // A second call in the same process keeps the first pool, which only affects speed.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.common.threads).build_global();
    }
    if let Some(dir) = &cli.common.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("creating {}: {e}", dir.display())))?;
    }
    let ctx = Ctx { seed, mode: cli.common.mode.into(), common: cli.common };
    match cli.cmd {
        Cmd::Scan { file, interval_norm } => cmd_scan(&ctx, &file, interval_norm),
        Cmd::Construct { kind, retries, sample, attempts } => match kind {
            ConstructKind::Model => construct_model(&ctx),
            ConstructKind::Product => construct_product_cmd(&ctx, retries),
            ConstructKind::Interval => construct_interval_cmd(&ctx, retries, sample, attempts),
            ConstructKind::Behrend => construct_behrend(&ctx),
        },
        Cmd::Upper { file, rho_base, nu, chi0 } => cmd_upper(&ctx, &file, rho_base, nu, chi0),
        Cmd::Verify { file, bound } => cmd_verify(&ctx, &file, &bound),
    }
}

fn artifact_fn(a: &Artifact) -> Result<DensityFn> {
    match a {
        Artifact::Function(f) => f.density_fn(),
        Artifact::Set(s) => s.indicator(),
    }
}

/// Writes `name` under `--out`, or prints it when `main` and no directory was given.
fn emit(ctx: &Ctx, name: &str, text: &str, main: bool) -> Result<()> {
    match &ctx.common.out {
        Some(dir) => write_text(&dir.join(name), text),
        None => {
            if main {
                print!("{text}");
            }
            Ok(())
        }
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parse(format!("{kind} needs --{flag}")))
}

#[derive(Serialize)]
struct DiffValue {
    d: usize,
    density: f64,
}

#[derive(Serialize)]
struct ScanSummary {
    meta: Meta,
    norm: Norm,
    n: usize,
    max_nonzero: Option<DiffValue>,
    min_nonzero: Option<DiffValue>,
    argmax_d: Option<usize>,
    total_lambda: Option<f64>,
}

fn cmd_scan(ctx: &Ctx, file: &Path, inorm: IntervalNorm) -> Result<i32> {
    let art = read_artifact(file)?;
    let f = artifact_fn(&art)?;
    let norm = match (f.domain.is_group(), inorm) {
        (true, _) => Norm::Group,
        (false, IntervalNorm::OverN) => Norm::IntervalOverN,
        (false, IntervalNorm::OverLen) => Norm::IntervalOverLen,
    };
    let prof = ap_profile(&f, norm)?;
    let dv = |p: Option<(usize, f64)>| p.map(|(d, density)| DiffValue { d, density });
    let summary = ScanSummary {
        meta: Meta::new("scan", None, None).param("file", file.display().to_string()),
        norm,
        n: f.len(),
        max_nonzero: dv(prof.max_nonzero()),
        min_nonzero: dv(prof.min_nonzero()),
        argmax_d: prof.max_nonzero().map(|p| p.0),
        total_lambda: if f.domain.is_group() { Some(total_3ap_density(&f)?) } else { None },
    };
    emit(ctx, "profile.csv", &profile_csv(&prof), true)?;
    match &ctx.common.out {
        Some(_) => emit(ctx, "summary.json", &to_json(&summary), false)?,
        None => eprint!("{}", to_json(&summary)),
    }
    Ok(EXIT_OK)
}

fn construct_model(ctx: &Ctx) -> Result<i32> {
    let alpha = need(ctx.common.alpha, "alpha", "model")?;
    let n = need(ctx.common.n, "n", "model")?;
    let g = build_model_fn(alpha, n)?;
    let report = verify_model_properties(&g);
    let meta = Meta::new("construct model", Some(ctx.seed), Some(ctx.mode)).param("alpha", alpha).param("n", n);
    let mut file = FunctionFile::new(&g.values, Some(meta.clone()));
    file.model = Some(ModelMeta { alpha, n });
    emit(ctx, "function.json", &to_json(&file), true)?;
    emit(ctx, "cert.json", &to_json(&serde_json::json!({ "meta": meta, "checks": report.checks, "pass": report.all_pass() })), false)?;
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_VERIFY })
}

fn construct_product_cmd(ctx: &Ctx, retries: usize) -> Result<i32> {
    let factors = ctx.common.factors.clone().ok_or_else(|| Error::Parse("product needs --factors".into()))?;
    let alpha = ctx.common.alpha.unwrap_or(0.25);
    let m1 = *factors.first().ok_or_else(|| Error::Parse("empty --factors".into()))? as f64;
    // Desk default: the smallest ε whose m₁ window still contains m₁.
    let epsilon = ctx.common.epsilon.unwrap_or(m1.powi(-3));
    let params = ProductParams::new(alpha, epsilon, &factors, ctx.mode);
    let out = construct_product(&params, ctx.seed, retries)?;
    let meta = Meta::new("construct product", Some(ctx.seed), Some(ctx.mode))
        .param("alpha", alpha)
        .param("epsilon", epsilon)
        .param("factors", &factors)
        .param("retries", retries);
    let mut f = out.f.clone();
    f.domain = crate::group::Domain::product(&factors)?;
    emit(ctx, "function.json", &to_json(&FunctionFile::new(&f, Some(meta.clone()))), true)?;
    let cert = serde_json::json!({
        "meta": meta,
        "cert": out.cert,
        "feasibility": out.feasibility,
        "pass": out.cert.passes(),
    });
    emit(ctx, "cert.json", &to_json(&cert), false)?;
    Ok(if out.cert.exhausted_at.is_some() {
        EXIT_RETRIES
    } else if out.cert.passes() {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

fn construct_interval_cmd(ctx: &Ctx, retries: usize, sample: bool, attempts: usize) -> Result<i32> {
    let n = need(ctx.common.n, "n", "interval")?;
    let alpha = need(ctx.common.alpha, "alpha", "interval")?;
    let epsilon = need(ctx.common.epsilon, "epsilon", "interval")?;
    let qf = ctx.common.factors.clone().unwrap_or_else(|| vec![3]);
    let meta = Meta::new("construct interval", Some(ctx.seed), Some(ctx.mode))
        .param("N", n)
        .param("alpha", alpha)
        .param("epsilon", epsilon)
        .param("factors", &qf)
        .param("retries", retries)
        .param("sample", sample);
    if sample {
        let (out, set) = construct_and_sample(n, alpha, epsilon, &qf, ctx.seed, retries, attempts)?;
        let sf = SetFile {
            kind: Kind::Interval,
            n,
            density: Some(set.elements.len() as f64 / n as f64),
            ap_density: Some(set.max_density),
            elements: set.elements.clone(),
            meta: Some(meta.clone()),
        };
        emit(ctx, "set.json", &to_json(&sf), true)?;
        emit(ctx, "function.json", &to_json(&FunctionFile::new(&out.f, Some(meta.clone()))), false)?;
        let cert = serde_json::json!({
            "meta": meta,
            "cert": out.cert,
            "sample": { "attempts": set.attempts, "size": set.elements.len(), "size_ok": set.size_ok,
                        "max_density": set.max_density, "worst_d": set.worst_d, "density_ok": set.density_ok },
            "pass": out.cert.passes() && set.size_ok && set.density_ok,
        });
        emit(ctx, "cert.json", &to_json(&cert), false)?;
        return Ok(if out.cert.passes() && set.size_ok && set.density_ok { EXIT_OK } else { EXIT_VERIFY });
    }
    let params = choose_interval_params(n, alpha, epsilon, ctx.mode, &qf)?;
    let out = construct_interval_fn(&params, ctx.seed, retries)?;
    emit(ctx, "function.json", &to_json(&FunctionFile::new(&out.f, Some(meta.clone()))), true)?;
    let cert = serde_json::json!({ "meta": meta, "params": params, "cert": out.cert, "pass": out.cert.passes() });
    emit(ctx, "cert.json", &to_json(&cert), false)?;
    Ok(if out.cert.passes() { EXIT_OK } else { EXIT_VERIFY })
}

fn construct_behrend(ctx: &Ctx) -> Result<i32> {
    let n = need(ctx.common.n, "n", "behrend")?;
    let meta = Meta::new("construct behrend", Some(ctx.seed), Some(ctx.mode)).param("n", n);
    let (file, cert) = match ctx.common.alpha {
        None => {
            let s = apfree_set(n);
            let ok = is_apfree(&s.elements);
            let density = s.len() as f64 / n as f64;
            let f = SetFile { kind: Kind::Interval, n, elements: s.elements, density: Some(density), ap_density: Some(0.0), meta: Some(meta.clone()) };
            (f, serde_json::json!({ "meta": meta, "apfree": ok, "pass": ok }))
        }
        Some(alpha) => {
            let meta = meta.param("alpha", alpha);
            let x = low_ap_density_subset(n, alpha)?;
            let f = SetFile {
                kind: Kind::Cyclic,
                n,
                elements: x.elements.clone(),
                density: Some(x.density),
                ap_density: Some(x.ap_density),
                meta: Some(meta.clone()),
            };
            (f, serde_json::json!({ "meta": meta, "subset": x, "pass": x.meets_bound }))
        }
    };
    emit(ctx, "set.json", &to_json(&file), true)?;
    let pass = cert["pass"].as_bool().unwrap_or(false);
    emit(ctx, "cert.json", &to_json(&cert), false)?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn cmd_upper(ctx: &Ctx, file: &Path, rho_base: f64, nu: f64, chi0: bool) -> Result<i32> {
    let f = artifact_fn(&read_artifact(file)?)?;
    if !f.domain.is_group() {
        return Err(Error::Parse("upper needs a cyclic function file".into()));
    }
    let epsilon = need(ctx.common.epsilon, "epsilon", "upper")?;
    let schedule = match ctx.mode {
        Mode::Strict => Schedule::Strict,
        Mode::Desk => Schedule::Desk { base: rho_base, nu },
    };
    let opts = UpperOptions { epsilon, schedule, include_chi0: chi0 };
    let trace = upper_search(&f.values, &opts)?;
    let meta = Meta::new("upper", Some(ctx.seed), Some(ctx.mode))
        .param("file", file.display().to_string())
        .param("epsilon", epsilon)
        .param("schedule", &opts.schedule)
        .param("chi0", chi0);
    let mut v = serde_json::to_value(&trace).expect("plain data");
    v["meta"] = serde_json::to_value(meta).expect("plain data");
    emit(ctx, "trace.json", &to_json(&v), true)?;
    Ok(if trace.pass { EXIT_OK } else { EXIT_VERIFY })
}

#[derive(Serialize)]
struct Verdict {
    meta: Meta,
    bound_kind: String,
    alpha: f64,
    epsilon: f64,
    bound: f64,
    worst_d: usize,
    worst_density: f64,
    size_ok: Option<bool>,
    pass: bool,
}

fn cmd_verify(ctx: &Ctx, file: &Path, bound: &str) -> Result<i32> {
    let art = read_artifact(file)?;
    let relative = match bound {
        "relative" => true,
        "absolute" => false,
        other => return Err(Error::Parse(format!("bound must be \"relative\" or \"absolute\", got {other:?}"))),
    };
    let stored = art.meta();
    let epsilon = ctx
        .common
        .epsilon
        .or_else(|| stored.and_then(|m| m.f64_param("epsilon")))
        .ok_or_else(|| Error::Parse("verify needs --epsilon (none stored in the file)".into()))?;
    let (alpha, worst, size_ok) = match &art {
        Artifact::Function(ff) => {
            let f = ff.density_fn()?;
            let alpha = ctx.common.alpha.unwrap_or_else(|| f.mean());
            (alpha, worst_profile(&f)?, None)
        }
        Artifact::Set(s) => {
            let measured = s.elements.len() as f64 / s.n as f64;
            let alpha = ctx.common.alpha.unwrap_or(measured);
            let worst = match s.kind {
                Kind::Interval => {
                    let p = set_profile(s.n, &s.elements);
                    argmax(&p, 1).unwrap_or((0, 0.0))
                }
                _ => worst_profile(&s.indicator()?)?,
            };
            (alpha, worst, Some(s.elements.len() as f64 >= alpha * s.n as f64))
        }
    };
    let b = if relative { alpha.powi(3) * (1.0 - epsilon) } else { alpha.powi(3) - epsilon };
    let pass = worst.1 <= b && size_ok.unwrap_or(true);
    let v = Verdict {
        meta: Meta::new("verify", None, None).param("file", file.display().to_string()),
        bound_kind: bound.into(),
        alpha,
        epsilon,
        bound: b,
        worst_d: worst.0,
        worst_density: worst.1,
        size_ok,
        pass,
    };
    emit(ctx, "verdict.json", &to_json(&v), true)?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn worst_profile(f: &DensityFn) -> Result<(usize, f64)> {
    let norm = if f.domain.is_group() { Norm::Group } else { Norm::IntervalOverLen };
    Ok(ap_profile(f, norm)?.max_nonzero().unwrap_or((0, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::RetriesExhausted("x".into())), 3);
        assert_eq!(exit_code(&Error::Infeasible("x".into())), 4);
        assert_eq!(exit_code(&Error::Degenerate("x".into())), 5);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["popdiff", "frobnicate"]), EXIT_PARSE);
        assert_eq!(run(["popdiff", "construct", "model", "--alpha", "0.25"]), EXIT_PARSE);
        assert_eq!(run(["popdiff", "--mode", "lax", "scan", "x.json"]), EXIT_PARSE);
        assert_eq!(run(["popdiff", "scan", "/nonexistent/file.json"]), EXIT_PARSE);
    }

    #[test]
    fn factors_flag_parses() {
        let cli = Cli::try_parse_from(["popdiff", "construct", "product", "--factors", "5,15629", "--seed", "42"]).unwrap();
        assert_eq!(cli.common.factors, Some(vec![5, 15629]));
        assert_eq!(cli.common.seed, 42);
    }
}
