//! `ldpest`: mechanisms, estimators, bounds and experiment sweeps from the shell.
//!
//! Machine-readable output goes to stdout or to `--out`; human summaries and
//! effective seeds go to stderr. Exit status is 0 on success, 2 on a usage
//! error and 1 on a runtime failure.

#![forbid(unsafe_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ldpest::bounds::bound_report;
use ldpest::domain::{DirichletPrior, Mechanism, TallyVector};
use ldpest::estimators::{
    estimate, posterior_mean_tallies, posterior_mse_exact, Method, MleConfig,
};
use ldpest::harness::{
    ingest_real, run_real, run_synthetic, write_sweep, Binning, ColumnRef, ColumnSpec, ExperimentConfig, Manifest,
};
use ldpest::io;
use ldpest::mechanisms::{rr_matrix, ue_matrix, BitmaskTally, Protocol, Reports, RrSpec, UeSpec, UeVariant};

#[derive(Parser)]
#[command(name = "ldpest", version, about = "Frequency estimation under local differential privacy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a mechanism matrix as CSV and print its epsilon.
    Mechanism(MechanismArgs),
    /// Estimate the input distribution from output tallies.
    Estimate(EstimateArgs),
    /// Run a synthetic sweep from a JSON config.
    Simulate(SimulateArgs),
    /// Run a sweep on private data read from a delimited file.
    Real(RealArgs),
    /// Estimate the entropy constants and evaluate the MSE lower bounds.
    Bounds(BoundsArgs),
    /// Exact posterior mean for a tally, and optionally the optimal MSE.
    Posterior(PosteriorArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Rr,
    Ue,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Symmetric,
    Optimized,
}

impl From<VariantArg> for UeVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Symmetric => UeVariant::Symmetric,
            VariantArg::Optimized => UeVariant::Optimized,
        }
    }
}

#[derive(Args)]
struct MechanismArgs {
    #[arg(value_enum)]
    family: Family,
    /// Alphabet size.
    #[arg(long)]
    a: usize,
    /// Privacy parameter.
    #[arg(long)]
    eps: f64,
    /// Unary-encoding parametrisation.
    #[arg(long, value_enum, default_value = "symmetric")]
    variant: VariantArg,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Matrix CSV, `rr:A,EPS`, `ue:A,EPS` or `oue:A,EPS`.
    #[arg(long)]
    mechanism: String,
    /// Output tallies (`index,count`); unary-encoding outputs are indexed by bitmask.
    #[arg(long)]
    tallies: PathBuf,
    /// fo, normsub, mle, mle-pgd, rr-exact or posterior.
    #[arg(long, default_value = "mle")]
    method: String,
    /// `jeffreys`, `uniform` or a CSV with header `index,gamma`; used by `posterior`.
    #[arg(long)]
    prior: Option<String>,
    /// Gradient tolerance of the projected-gradient solver.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Iteration cap of the projected-gradient solver.
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    /// Directory for `estimate.csv` and `report.json`; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThreadArgs {
    /// Worker threads.
    #[arg(long, env = "LDPEST_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Args)]
struct RealArgs {
    /// Delimited text file with one private value per row.
    #[arg(long)]
    input: PathBuf,
    /// Column name, or 0-based position with `--no-header`.
    #[arg(long)]
    column: String,
    /// Field delimiter.
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    /// Bin a numeric column into this many equal-width bins.
    #[arg(long, requires_all = ["min", "max"])]
    bins: Option<usize>,
    #[arg(long)]
    min: Option<f64>,
    #[arg(long)]
    max: Option<f64>,
    /// Experiment config (JSON); `n` and `prior` are ignored for real data.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Args)]
struct BoundsArgs {
    /// Matrix CSV, `rr:A,EPS`, `ue:A,EPS` or `oue:A,EPS`.
    #[arg(long)]
    mechanism: String,
    /// `jeffreys`, `uniform` or a CSV with header `index,gamma`.
    #[arg(long, default_value = "jeffreys")]
    prior: String,
    /// Monte-Carlo samples of `P`.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long)]
    seed: u64,
    /// Users, for the per-n bounds.
    #[arg(long)]
    n: u64,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    threads: ThreadArgs,
}

#[derive(Args)]
struct PosteriorArgs {
    /// Matrix CSV, `rr:A,EPS`, `ue:A,EPS` or `oue:A,EPS`.
    #[arg(long)]
    mechanism: String,
    /// `jeffreys`, `uniform` or a CSV with header `index,gamma`.
    #[arg(long, default_value = "jeffreys")]
    prior: String,
    /// Output tallies (`index,count`).
    #[arg(long)]
    tallies: Option<PathBuf>,
    /// Also compute the exact optimal MSE for this many users.
    #[arg(long)]
    mse_n: Option<usize>,
    /// Output JSON file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mechanism(a) => cmd_mechanism(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Real(a) => cmd_real(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Posterior(a) => cmd_posterior(a),
    }
}

/// Parses `rr:A,EPS`, `ue:A,EPS`, `oue:A,EPS`, or reads a matrix CSV.
fn parse_protocol(s: &str) -> Result<Protocol> {
    if let Some((family, rest)) = s.split_once(':') {
        if matches!(family, "rr" | "ue" | "oue") {
            let (a, eps) = rest.split_once(',').with_context(|| format!("expected `{family}:A,EPS`, got `{s}`"))?;
            let a: usize = a.trim().parse().with_context(|| format!("bad alphabet size `{a}`"))?;
            let eps: f64 = eps.trim().parse().with_context(|| format!("bad epsilon `{eps}`"))?;
            return Ok(match family {
                "rr" => Protocol::rr(RrSpec::new(a, eps)?),
                "ue" => Protocol::Ue(UeSpec::symmetric(a, eps)?),
                _ => Protocol::Ue(UeSpec::optimized(a, eps)?),
            });
        }
    }
    let m = io::read_matrix(s).with_context(|| format!("reading mechanism `{s}`"))?;
    Ok(Protocol::Explicit(m))
}

fn parse_prior(s: &str, a: usize) -> Result<DirichletPrior> {
    let prior = match s {
        "jeffreys" => DirichletPrior::jeffreys(a),
        "uniform" => DirichletPrior::uniform(a),
        path => io::read_prior(path).with_context(|| format!("reading prior `{path}`"))?,
    };
    if prior.alphabet_size() != a {
        bail!("prior has {} parameters but the alphabet has {a} symbols", prior.alphabet_size());
    }
    Ok(prior)
}

fn reports_for(protocol: &Protocol, tallies: TallyVector) -> Result<Reports> {
    Ok(match protocol {
        Protocol::Ue(spec) => Reports::Bitmasks(BitmaskTally::from_dense(spec.a, tallies.counts())?),
        _ => Reports::Symbols(tallies),
    })
}

fn mechanism_of(protocol: &Protocol) -> Result<Mechanism> {
    protocol.mechanism().context("the mechanism has no explicit matrix at this size")
}

fn set_threads(t: &ThreadArgs) -> Result<()> {
    if let Some(k) = t.threads {
        if k == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    Ok(())
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_mechanism(a: MechanismArgs) -> Result<()> {
    let m = match a.family {
        Family::Rr => rr_matrix(&RrSpec::new(a.a, a.eps)?),
        Family::Ue => {
            let spec = match a.variant {
                VariantArg::Symmetric => UeSpec::symmetric(a.a, a.eps)?,
                VariantArg::Optimized => UeSpec::optimized(a.a, a.eps)?,
            };
            ue_matrix(&spec)?
        }
    };
    match &a.out {
        Some(p) => io::write_matrix(p, m.matrix()).with_context(|| format!("writing {}", p.display()))?,
        None => io::write_matrix_to(std::io::stdout().lock(), m.matrix())?,
    }
    let line = format!("epsilon={:.6}", m.ldp_epsilon());
    if a.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let protocol = parse_protocol(&a.mechanism)?;
    let method: Method = a.method.parse()?;
    let tallies = io::read_tallies(&a.tallies).with_context(|| format!("reading {}", a.tallies.display()))?;
    let reports = reports_for(&protocol, tallies)?;
    let prior = a.prior.as_deref().map(|p| parse_prior(p, protocol.input_size())).transpose()?;
    let cfg = MleConfig { max_iterations: a.max_iterations, tolerance: a.tolerance, initial: None };
    let r = estimate(&protocol, &reports, method, &cfg, prior.as_ref())?;
    let report = json!({
        "estimator": r.estimator_name,
        "objective": r.objective,
        "iterations": r.iterations,
        "converged": r.converged,
        "estimate": r.estimate.values(),
        "projected": r.projected.probs(),
    });
    if !r.converged {
        eprintln!("warning: solver stopped after {} iterations without converging", r.iterations);
    }
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            io::write_probs(dir.join("estimate.csv"), r.estimate.values())?;
            io::write_probs(dir.join("projected.csv"), r.projected.probs())?;
            emit_json(&report, Some(&dir.join("report.json")))?;
        }
        None => emit_json(&report, None)?,
    }
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>, threads: &ThreadArgs) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if threads.threads.is_some() {
        cfg.threads = threads.threads;
    }
    Ok(cfg)
}

fn summarise(result: &ldpest::harness::SweepResult) {
    for r in &result.aggregates {
        eprintln!(
            "eps={:<6} {:<9} {:<6} mse={:.4e} +- {:.1e} ({} trials, {} excluded)",
            r.epsilon, r.estimator, r.target.name(), r.mean_mse, r.stderr, r.trials, r.excluded
        );
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed, &a.threads)?;
    eprintln!("seed={}", cfg.seed);
    let start = Instant::now();
    let result = run_synthetic(&cfg)?;
    let manifest = Manifest::new(&cfg, &result, start.elapsed().as_secs_f64());
    write_sweep(&a.out, &result, &manifest)?;
    summarise(&result);
    Ok(())
}

fn cmd_real(a: RealArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed, &a.threads)?;
    let column = match a.column.parse::<usize>() {
        Ok(i) if a.no_header => ColumnRef::Index(i),
        _ => ColumnRef::Name(a.column.clone()),
    };
    if !a.delimiter.is_ascii() {
        bail!("delimiter must be a single ASCII character");
    }
    let binning = match (a.bins, a.min, a.max) {
        (Some(b), Some(lo), Some(hi)) => Some(Binning::new(b, lo, hi)?),
        (None, None, None) => None,
        _ => bail!("--bins, --min and --max go together"),
    };
    let spec = ColumnSpec { column, delimiter: a.delimiter as u8, has_header: !a.no_header, binning };
    let data = ingest_real(&a.input, &spec).with_context(|| format!("reading {}", a.input.display()))?;
    eprintln!("seed={}", cfg.seed);
    eprintln!("{} valid rows, {} invalid, {} categories", data.tally.total(), data.invalid, data.tally.len());

    let start = Instant::now();
    let result = run_real(&data.tally, &cfg)?;
    let mut manifest = Manifest::new(&cfg, &result, start.elapsed().as_secs_f64());
    manifest.notes.push(("input".into(), a.input.display().to_string()));
    manifest.notes.push(("valid_rows".into(), data.tally.total().to_string()));
    manifest.notes.push(("invalid_rows".into(), data.invalid.to_string()));
    write_sweep(&a.out, &result, &manifest)?;
    io::write_tallies(a.out.join("tallies.csv"), &data.tally)?;
    let labels: Vec<_> = data.labels.iter().enumerate().map(|(i, l)| json!({"index": i, "label": l})).collect();
    emit_json(&json!(labels), Some(&a.out.join("labels.json")))?;
    summarise(&result);
    Ok(())
}

fn cmd_bounds(a: BoundsArgs) -> Result<()> {
    set_threads(&a.threads)?;
    let protocol = parse_protocol(&a.mechanism)?;
    let q = mechanism_of(&protocol)?;
    let prior = parse_prior(&a.prior, q.input_size())?;
    eprintln!("seed={}", a.seed);
    let report = bound_report(&q, &prior, a.samples, a.seed, a.n)?;
    emit_json(&serde_json::to_value(&report)?, a.out.as_deref())
}

fn cmd_posterior(a: PosteriorArgs) -> Result<()> {
    let protocol = parse_protocol(&a.mechanism)?;
    let q = mechanism_of(&protocol)?;
    let prior = parse_prior(&a.prior, q.input_size())?;
    if a.tallies.is_none() && a.mse_n.is_none() {
        bail!("give --tallies, --mse-n, or both");
    }
    let mut out = serde_json::Map::new();
    if let Some(path) = &a.tallies {
        let t = io::read_tallies(path).with_context(|| format!("reading {}", path.display()))?;
        let post = posterior_mean_tallies(&q, &prior, &t)?;
        out.insert("posterior".into(), serde_json::to_value(&post)?);
    }
    if let Some(n) = a.mse_n {
        out.insert("n".into(), json!(n));
        out.insert("optimal_mse".into(), json!(posterior_mse_exact(&q, &prior, n)?));
    }
    emit_json(&serde_json::Value::Object(out), a.out.as_deref())
}
