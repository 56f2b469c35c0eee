//! `polyattn`: compute, verify, benchmark and demonstrate poly-attention.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 when a verification fails.

use std::fs::File;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polyattn::approx::ApproxConfig;
use polyattn::bench::{loglog_slope, median_time, write_records, BenchRecord};
use polyattn::constructions::{
    brute_force_root, default_scale, encode_composition, encode_root_finding, min_scale, solve_composition,
    solve_root_finding, CompositionInstance, IntPoly, RootFindingOptions,
};
use polyattn::dispatch::{admissible_engines, is_admissible, run_engine, EngineChoice};
use polyattn::exact::DEFAULT_BUDGET;
use polyattn::rng::{random_inputs, rng, RNG_ALGORITHM};
use polyattn::{
    attend_bruteforce_with, build_structure, AttentionInputs, AttentionPolynomial, BruteForceConfig, Matrix,
    PolyClass,
};
use serde_json::{json, Value};

const EXIT_VALIDATION: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;
const BUDGET_ENV: &str = "POLYATTN_BUDGET";

#[derive(Parser)]
#[command(name = "polyattn", version, about = "Poly-attention engines and constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the attention output for matrices stored as CSV files.
    Compute(ComputeArgs),
    /// Compare every admissible engine against the brute-force oracle on random instances.
    Verify(VerifyArgs),
    /// Time an engine over a ladder of sizes and fit the log-log slope.
    Bench(BenchArgs),
    /// Solve random function-composition instances with one attention head.
    Compose(ComposeArgs),
    /// Find a root of an integer polynomial over a finite set with two heads.
    Roots(RootsArgs),
    /// Print the structure of an attention polynomial as JSON.
    Parse(ParseArgs),
}

#[derive(Args)]
struct EngineArgs {
    /// auto, brute, tree, cycle, approx-lowrank or approx-tensor.
    #[arg(long)]
    engine: Option<EngineChoice>,
    /// Target relative error of each approximated exponential.
    #[arg(long)]
    eps: Option<f64>,
    /// Divisor of the exponent (defaults to d).
    #[arg(long)]
    dscale: Option<f64>,
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    poly: String,
    /// Comma-separated CSV paths for Q1..Qt.
    #[arg(long, value_delimiter = ',')]
    q: Vec<PathBuf>,
    /// Comma-separated CSV paths for V2..Vt.
    #[arg(long, value_delimiter = ',')]
    v: Vec<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output CSV; without it the matrix goes to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    poly: String,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Query-key entries are drawn from [-b, b].
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    poly: String,
    /// Comma-separated ascending sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    engine: EngineArgs,
    /// Output CSV; without it records go to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ComposeArgs {
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Scale A of the query-key rows; must exceed sqrt(r+2).
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args)]
struct RootsArgs {
    /// Integer polynomial, e.g. "x1+x2+x3"; "match3" is accepted as a preset.
    #[arg(long, default_value = "match3")]
    p: String,
    /// Comma-separated distinct values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    set: Vec<f64>,
    /// Exponent gap c_gap (defaults to a value derived from n and t).
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    poly: String,
}

/// A failed check, distinct from invalid input.
#[derive(Debug)]
struct VerificationFailed(String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Compose(a) => cmd_compose(a),
        Command::Roots(a) => cmd_roots(a),
        Command::Parse(a) => cmd_parse(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<VerificationFailed>() => {
            eprintln!("verification failed: {e}");
            ExitCode::from(EXIT_VERIFICATION)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn budget() -> Result<u128> {
    match std::env::var(BUDGET_ENV) {
        Ok(s) => s.trim().parse().with_context(|| format!("{BUDGET_ENV}={s:?} is not a non-negative integer")),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn approx_config(eps: Option<f64>) -> ApproxConfig {
    eps.map_or_else(ApproxConfig::default, ApproxConfig::with_eps)
}

fn with_dscale(inp: AttentionInputs, dscale: Option<f64>) -> Result<AttentionInputs> {
    Ok(match dscale {
        Some(s) => inp.with_d_scale(s)?,
        None => inp,
    })
}

fn parse_poly(text: &str) -> Result<AttentionPolynomial> {
    AttentionPolynomial::parse(text).with_context(|| format!("invalid polynomial {text:?}"))
}

fn read_matrices(paths: &[PathBuf]) -> Result<Vec<Matrix>> {
    paths
        .iter()
        .map(|p| Matrix::read_csv_file(p).with_context(|| format!("reading {}", p.display())))
        .collect()
}

/// Sends the summary to stdout when the main payload went to a file.
fn emit_summary(summary: &Value, payload_on_stdout: bool) {
    let text = serde_json::to_string_pretty(summary).expect("json");
    if payload_on_stdout {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
}

fn check_admissible(engine: EngineChoice, h: &AttentionPolynomial) -> Result<()> {
    if !is_admissible(engine, h) {
        bail!(
            "engine {engine} is not admissible for {h} (class {}); admissible: {}",
            build_structure(h).class.name(),
            admissible_engines(h).iter().map(|e| e.name()).collect::<Vec<_>>().join(", ")
        );
    }
    Ok(())
}

fn cmd_compute(a: ComputeArgs) -> Result<()> {
    let h = parse_poly(&a.poly)?;
    let engine = a.engine.engine.unwrap_or(EngineChoice::Auto);
    check_admissible(engine, &h)?;
    let inp = AttentionInputs::new(h, read_matrices(&a.q)?, read_matrices(&a.v)?)?;
    let inp = with_dscale(inp, a.engine.dscale)?;
    let start = Instant::now();
    let out = run_engine(engine, &inp, &approx_config(a.engine.eps), budget()?)?;
    let time_ns = start.elapsed().as_nanos() as u64;
    match &a.out {
        Some(path) => out.matrix.write_csv_file(path).with_context(|| format!("writing {}", path.display()))?,
        None => out.matrix.write_csv(io::stdout().lock())?,
    }
    emit_summary(
        &json!({
            "engine": out.engine.name(),
            "requested_engine": engine.name(),
            "polynomial": inp.h().to_string(),
            "n": inp.n(),
            "d": inp.d(),
            "d_scale": inp.d_scale(),
            "time_ns": time_ns,
        }),
        a.out.is_none(),
    );
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let h = parse_poly(&a.poly)?;
    if a.n == 0 || a.d == 0 {
        bail!("n and d must be positive");
    }
    if !(a.b.is_finite() && a.b >= 0.0) {
        bail!("entry bound b must be finite and non-negative");
    }
    let budget = budget()?;
    let tuples = (a.n as u128).checked_pow(h.t() as u32 - 1).unwrap_or(u128::MAX);
    if tuples > budget {
        bail!("oracle needs {tuples} tuples per row, over the budget {budget} (set {BUDGET_ENV} to raise it)");
    }
    // Approximate engines are opt-in (via --eps or --engine): they cannot meet
    // an exact-engine tolerance.
    let engines: Vec<EngineChoice> = match a.engine.engine {
        Some(e) => {
            check_admissible(e, &h)?;
            vec![e]
        }
        None => admissible_engines(&h)
            .into_iter()
            .filter(|e| *e != EngineChoice::Brute && (a.engine.eps.is_some() || !e.is_approximate()))
            .collect(),
    };
    if a.trials == 0 {
        eprintln!("warning: --trials 0 checks nothing; reporting a vacuous pass");
    }
    let cfg = approx_config(a.engine.eps);
    let oracle_cfg = BruteForceConfig { budget, safe: false };
    let mut worst = vec![0.0f64; engines.len()];
    let mut failures: Vec<Option<String>> = vec![None; engines.len()];
    let mut g = rng(a.seed);
    for _ in 0..a.trials {
        let inp = with_dscale(random_inputs(&h, a.n, a.d, a.b, &mut g), a.engine.dscale)?;
        let oracle = attend_bruteforce_with(&inp, &oracle_cfg)?.matrix;
        for (k, &e) in engines.iter().enumerate() {
            match run_engine(e, &inp, &cfg, budget) {
                Ok(out) => worst[k] = worst[k].max(out.matrix.max_abs_diff(&oracle)?),
                Err(err) => {
                    failures[k].get_or_insert_with(|| err.to_string());
                }
            }
        }
    }
    let rows: Vec<Value> = engines
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let pass = failures[k].is_none() && worst[k] <= a.tol;
            json!({"engine": e.name(), "max_abs_err": worst[k], "pass": pass, "error": failures[k]})
        })
        .collect();
    let pass = rows.iter().all(|r| r["pass"] == true);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "polynomial": h.to_string(),
            "n": a.n,
            "d": a.d,
            "b": a.b,
            "trials": a.trials,
            "seed": a.seed,
            "rng": RNG_ALGORITHM,
            "tol": a.tol,
            "engines": rows,
            "vacuous": a.trials == 0,
            "pass": pass,
        }))?
    );
    if !pass {
        return Err(VerificationFailed(format!("an engine exceeded tol {:e} or failed", a.tol)).into());
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let h = parse_poly(&a.poly)?;
    if a.sizes.windows(2).any(|w| w[0] >= w[1]) {
        bail!("sizes must be strictly ascending");
    }
    if a.sizes.contains(&0) || a.d == 0 {
        bail!("sizes and d must be positive");
    }
    let engine = a.engine.engine.unwrap_or(EngineChoice::Auto);
    check_admissible(engine, &h)?;
    let cfg = approx_config(a.engine.eps);
    let budget = budget()?;
    let mut records = Vec::new();
    for &n in &a.sizes {
        let inp = with_dscale(random_inputs(&h, n, a.d, a.b, &mut rng(a.seed ^ n as u64)), a.engine.dscale)?;
        let (ns, out) = median_time(a.reps, || run_engine(engine, &inp, &cfg, budget))?;
        // The oracle costs n^t per column; only run it when that stays small.
        let oracle_cost = (n as u128).checked_pow(h.t() as u32).unwrap_or(u128::MAX);
        let max_abs_err = if oracle_cost <= 10_000_000 {
            let oracle = attend_bruteforce_with(&inp, &BruteForceConfig { budget, safe: false })?.matrix;
            Some(out.matrix.max_abs_diff(&oracle)?)
        } else {
            None
        };
        records.push(BenchRecord {
            engine: out.engine.name().to_string(),
            polynomial: h.to_string(),
            n,
            d: a.d,
            wall_time_ns: ns,
            max_abs_err,
            repetitions: a.reps,
        });
    }
    match &a.out {
        Some(path) => write_records(&records, File::create(path).with_context(|| format!("creating {}", path.display()))?)?,
        None => write_records(&records, io::stdout().lock())?,
    }
    let points: Vec<(usize, u64)> = records.iter().map(|r| (r.n, r.wall_time_ns)).collect();
    emit_summary(
        &json!({
            "engine": engine.name(),
            "polynomial": h.to_string(),
            "sizes": a.sizes,
            "reps": a.reps,
            "seed": a.seed,
            "rng": RNG_ALGORITHM,
            "loglog_slope": loglog_slope(&points),
        }),
        a.out.is_none(),
    );
    Ok(())
}

fn cmd_compose(a: ComposeArgs) -> Result<()> {
    if a.r < 2 || a.n < 2 {
        bail!("need r >= 2 and n >= 2");
    }
    let scale = a.scale.unwrap_or_else(|| default_scale(a.r));
    if !(scale > min_scale(a.r)) {
        bail!("scale {scale} must exceed sqrt(r+2) = {:.4}", min_scale(a.r));
    }
    let mut g = rng(a.seed);
    let (mut correct, mut decode_failures) = (0usize, 0usize);
    for _ in 0..a.count {
        let inst = CompositionInstance::random(a.r, a.n, &mut g)?;
        let enc = encode_composition(&inst, scale)?;
        match solve_composition(&enc) {
            Ok(ans) if ans == inst.direct_answer() => correct += 1,
            Ok(_) => {}
            Err(_) => decode_failures += 1,
        }
    }
    let accuracy = if a.count == 0 { 1.0 } else { correct as f64 / a.count as f64 };
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "r": a.r,
            "n": a.n,
            "tokens": a.r * a.n + 1,
            "scale": scale,
            "count": a.count,
            "correct": correct,
            "decode_failures": decode_failures,
            "accuracy": accuracy,
            "seed": a.seed,
            "rng": RNG_ALGORITHM,
        }))?
    );
    if correct < a.count {
        return Err(VerificationFailed(format!("{correct}/{} instances decoded correctly", a.count)).into());
    }
    Ok(())
}

fn cmd_roots(a: RootsArgs) -> Result<()> {
    let text = if a.p == "match3" { "x1+x2+x3" } else { a.p.as_str() };
    let p = IntPoly::parse(text).with_context(|| format!("invalid polynomial {text:?}"))?;
    let inst = encode_root_finding(&p, &a.set, &RootFindingOptions { c_gap: a.scale, tie_break: true })?;
    let found = solve_root_finding(&inst)?;
    let brute = brute_force_root(&p, &a.set);
    let agree = found.is_some() == brute.is_some() && found.as_ref().is_none_or(|t| p.eval(t) == 0.0);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "p": p.to_string(),
            "set": a.set,
            "c_gap": inst.c_gap,
            "found": found,
            "brute_force": brute,
            "agree": agree,
        }))?
    );
    if !agree {
        return Err(VerificationFailed("attention result disagrees with the brute-force scan".into()).into());
    }
    Ok(())
}

fn cmd_parse(a: ParseArgs) -> Result<()> {
    let h = parse_poly(&a.poly)?;
    let st = build_structure(&h);
    let cycle = match &st.class {
        PolyClass::SingleCycle { vertices, .. } => Some(vertices.clone()),
        _ => None,
    };
    let branches: Vec<Value> = st
        .branches
        .iter()
        .map(|b| json!({"polynomial": b.poly.to_string(), "contains_x1": b.contains_x1}))
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "canonical": h.to_string(),
            "t": h.t(),
            "k": h.k(),
            "s": h.s(),
            "class": st.class.name(),
            "cycle": cycle,
            "branches": branches,
            "isolated": st.isolated,
            "admissible_engines": admissible_engines(&h).iter().map(|e| e.name()).collect::<Vec<_>>(),
        }))?
    );
    Ok(())
}
