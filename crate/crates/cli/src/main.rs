//! `qs`: drive the streaming quantile summaries from the command line.
//!
//! Subcommands: `run` (ingest a stream, answer interleaved queries), `eval`
//! (seeded trials scored against the exact oracle), `bench` (throughput and
//! space), `goodness` (per-row sample-stream health, memory-unbounded).
//!
//! Exit codes: 0 success, 1 a correctness assertion tripped, 2 usage or input
//! error. Every behavior here is a thin wrapper over the library API; reports
//! are produced by the library's serializers, byte-for-byte.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qs_core::bench::{run_bench, BenchConfig, BenchReport, BenchTiming};
use qs_core::eval::{
    default_phis, default_probes, run_eval, run_queries, Algorithm, ErrorReport, EvalConfig,
    RunConfig, RunReport,
};
use qs_core::fixed_n::default_m;
use qs_core::goodness::{run_goodness, GoodnessConfig, GoodnessReport};
use qs_core::stream::{parse_dist, StreamSpec};
use qs_core::QsError;

const SCALE_CAP_ENV: &str = "QS_SCALE_CAP";
const DEFAULT_SCALE_CAP: u64 = 1 << 24;

#[derive(Parser)]
#[command(
    name = "qs",
    version,
    about = "Streaming quantile summaries: run, evaluate, benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a stream and answer quantile queries at chosen timesteps.
    Run(RunArgs),
    /// Run seeded trials and score every answer against the exact oracle.
    Eval(EvalArgs),
    /// Measure throughput, space peaks, and per-item work.
    Bench(BenchArgs),
    /// Probe per-row sample-stream health events (memory-unbounded).
    Goodness(GoodnessArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Args)]
struct CommonArgs {
    /// Summary to drive: gk | fixedn | online | reservoir-baseline.
    #[arg(long, default_value = "online")]
    algo: Algorithm,
    /// Target relative error, in (0, 0.5].
    #[arg(long)]
    epsilon: f64,
    /// Row-size / sample-size parameter; defaults to a desk-scale rule.
    #[arg(long)]
    m: Option<u64>,
    /// Stream length.
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// sorted | reversed | uniform[:LO:HI] | zipf[:EXP[:UNIVERSE]] |
    /// sawtooth[:PERIOD] | file:PATH
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Write the report to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample budget for the reservoir baseline; defaults to the measured
    /// peak tuple count of an online run with the same parameters.
    #[arg(long)]
    reservoir_k: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Queries as T:PHI[,T:PHI...] or a path to a file with one T:PHI per line.
    #[arg(long)]
    queries: Option<String>,
    /// Probe timesteps (comma-separated); crossed with --phis when --queries
    /// is absent. Defaults to powers of two plus row hand-off edges.
    #[arg(long)]
    probes: Option<String>,
    /// Quantile fractions (comma-separated). Defaults to 0.5 for run.
    #[arg(long)]
    phis: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 10)]
    trials: u32,
    /// Probe timesteps (comma-separated). Defaults to powers of two plus row
    /// hand-off edges.
    #[arg(long)]
    probes: Option<String>,
    /// Quantile fractions (comma-separated). Defaults to the 19-point grid
    /// 0.05..0.95.
    #[arg(long)]
    phis: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also run at n/10 and compare steady-state space peaks.
    #[arg(long)]
    flatness: bool,
}

#[derive(Args)]
struct GoodnessArgs {
    /// Target relative error, in (0, 0.5].
    #[arg(long)]
    epsilon: f64,
    /// Row-size parameter; defaults to a desk-scale rule.
    #[arg(long)]
    m: Option<u64>,
    /// Stream length; refused above the QS_SCALE_CAP env guard.
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    dist: String,
    #[arg(long, default_value_t = 100)]
    trials: u32,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<QsError> for CliError {
    fn from(e: QsError) -> Self {
        CliError::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Goodness(args) => cmd_goodness(args),
    }
}

fn stream_spec(dist: &str, n: u64, seed: u64) -> Result<StreamSpec, CliError> {
    let kind = parse_dist(dist, n).map_err(QsError::from)?;
    Ok(StreamSpec::new(kind, n, seed))
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .filter(|tok| !tok.trim().is_empty())
        .map(|tok| {
            tok.trim()
                .parse::<u64>()
                .map_err(|_| CliError::usage(format!("bad integer {:?} in list", tok)))
        })
        .collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|tok| !tok.trim().is_empty())
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad number {:?} in list", tok)))
        })
        .collect()
}

fn parse_query_token(tok: &str) -> Result<(u64, f64), CliError> {
    let (t, phi) = tok
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("query {:?} is not T:PHI", tok)))?;
    let t = t
        .trim()
        .parse::<u64>()
        .map_err(|_| CliError::usage(format!("bad query time {:?}", t)))?;
    let phi = phi
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::usage(format!("bad query phi {:?}", phi)))?;
    Ok((t, phi))
}

/// `--queries` accepts an inline T:PHI list or a path to a file of them.
fn parse_queries(arg: &str) -> Result<Vec<(u64, f64)>, CliError> {
    if arg.contains(':') && !PathBuf::from(arg).exists() {
        return arg
            .split(',')
            .filter(|tok| !tok.trim().is_empty())
            .map(parse_query_token)
            .collect();
    }
    let text = fs::read_to_string(arg)
        .map_err(|e| CliError::usage(format!("cannot read queries file {:?}: {}", arg, e)))?;
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(parse_query_token)
        .collect()
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::usage(format!("cannot write {:?}: {}", path, e))),
        None => {
            print!("{}", content);
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<u8, CliError> {
    let c = &args.common;
    let stream = stream_spec(&c.dist, c.n, c.seed)?;
    let queries = match &args.queries {
        Some(q) => parse_queries(q)?,
        None => {
            let m = c.m.unwrap_or_else(|| default_m(c.epsilon));
            let probes = match &args.probes {
                Some(p) => parse_u64_list(p)?,
                None => default_probes(c.n, m),
            };
            let phis = match &args.phis {
                Some(p) => parse_f64_list(p)?,
                None => vec![0.5],
            };
            probes
                .iter()
                .flat_map(|&t| phis.iter().map(move |&phi| (t, phi)))
                .collect()
        }
    };
    let cfg = RunConfig {
        algo: c.algo,
        epsilon: c.epsilon,
        m: c.m,
        n: c.n,
        seed: c.seed,
        stream,
        queries,
        reservoir_k: c.reservoir_k,
    };
    let report = run_queries(&cfg)?;
    let content = match c.format {
        Format::Json => report.to_json_string(),
        Format::Csv => report.to_csv_string(),
        Format::Human => render_run(&report),
    };
    emit(&c.out, &content)?;
    Ok(0)
}

fn cmd_eval(args: EvalArgs) -> Result<u8, CliError> {
    let c = &args.common;
    let m = c.m.unwrap_or_else(|| default_m(c.epsilon));
    let stream = stream_spec(&c.dist, c.n, c.seed)?;
    let probes = match &args.probes {
        Some(p) => parse_u64_list(p)?,
        None => default_probes(c.n, m),
    };
    let phis = match &args.phis {
        Some(p) => parse_f64_list(p)?,
        None => default_phis(),
    };
    let cfg = EvalConfig {
        algo: c.algo,
        epsilon: c.epsilon,
        m: c.m,
        n: c.n,
        seed: c.seed,
        stream,
        probes,
        phis,
        trials: args.trials,
        reservoir_k: c.reservoir_k,
    };
    let report = run_eval(&cfg)?;
    let content = match c.format {
        Format::Json => report.to_json_string(),
        Format::Csv => report.to_csv_string(),
        Format::Human => render_eval(&report),
    };
    emit(&c.out, &content)?;
    // The plain GK summary is deterministic; any failure there is a
    // correctness assertion, not noise.
    if c.algo == Algorithm::Gk && report.probes.iter().any(|p| p.failures > 0) {
        eprintln!("assertion failed: deterministic summary exceeded its rank tolerance");
        return Ok(1);
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs) -> Result<u8, CliError> {
    let c = &args.common;
    let stream = stream_spec(&c.dist, c.n, c.seed)?;
    let cfg = BenchConfig {
        algo: c.algo,
        epsilon: c.epsilon,
        m: c.m,
        n: c.n,
        seed: c.seed,
        stream,
        flatness: args.flatness,
        reservoir_k: c.reservoir_k,
    };
    let (report, timing) = run_bench(&cfg)?;
    // Wall-clock numbers stay out of the report files so identical flags
    // produce identical bytes.
    eprintln!(
        "timing: {} items in {:.3}s ({:.0} items/sec)",
        report.items, timing.elapsed_secs, timing.items_per_sec
    );
    let content = match c.format {
        Format::Json => report.to_json_string(),
        Format::Csv => report.to_csv_string(),
        Format::Human => render_bench(&report, &timing),
    };
    emit(&c.out, &content)?;
    Ok(0)
}

fn cmd_goodness(args: GoodnessArgs) -> Result<u8, CliError> {
    let cap = match std::env::var(SCALE_CAP_ENV) {
        Ok(v) => u64::from_str(&v)
            .map_err(|_| CliError::usage(format!("bad {} value {:?}", SCALE_CAP_ENV, v)))?,
        Err(_) => DEFAULT_SCALE_CAP,
    };
    if args.n > cap {
        return Err(CliError::usage(format!(
            "goodness mode is memory-unbounded; n = {} exceeds the scale cap {} (override with {})",
            args.n, cap, SCALE_CAP_ENV
        )));
    }
    let m = args.m.unwrap_or_else(|| default_m(args.epsilon));
    let stream = stream_spec(&args.dist, args.n, args.seed)?;
    let cfg = GoodnessConfig {
        epsilon: args.epsilon,
        m,
        n: args.n,
        seed: args.seed,
        trials: args.trials,
        stream,
    };
    let report = run_goodness(&cfg)?;
    let content = match args.format {
        Format::Json => report.to_json_string(),
        Format::Csv => report.to_csv_string(),
        Format::Human => render_goodness(&report),
    };
    emit(&args.out, &content)?;
    let impossible = report
        .rows
        .iter()
        .any(|r| !r.sampled && (r.size_events > 0 || r.rank_events > 0));
    if impossible {
        eprintln!("assertion failed: events recorded on an unsampled row");
        return Ok(1);
    }
    Ok(0)
}

fn render_run(report: &RunReport) -> String {
    let mut out = format!(
        "run: algo={} epsilon={} m={} n={} seed={}\n",
        report.algo, report.epsilon, report.m, report.n, report.seed
    );
    out.push_str("        t       phi        rho           answer  row  guaranteed\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{:>9}  {:>8}  {:>9}  {:>15}  {:>3}  {:>10}\n",
            r.t,
            r.phi,
            r.rho,
            r.answer,
            r.row.map(|v| v.to_string()).unwrap_or_else(|| "-".into()),
            r.guaranteed
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into()),
        ));
    }
    out
}

fn render_eval(report: &ErrorReport) -> String {
    let mut out = format!(
        "eval: algo={} epsilon={} m={} n={} trials={} tolerance={}*eps*t\n",
        report.algo, report.epsilon, report.m, report.n, report.trials, report.tolerance_factor
    );
    out.push_str("        t   queries  failures  fail_frac   max_norm_err  mean_norm_err\n");
    for p in &report.probes {
        out.push_str(&format!(
            "{:>9}  {:>8}  {:>8}  {:>9.4}  {:>13.6}  {:>13.6}\n",
            p.t, p.queries, p.failures, p.failure_fraction, p.max_norm_err, p.mean_norm_err
        ));
    }
    out
}

fn render_bench(report: &BenchReport, timing: &BenchTiming) -> String {
    let mut out = format!(
        "bench: algo={} epsilon={} m={} n={}\n\
         items={} elapsed={:.3}s rate={:.0} items/sec\n\
         peak_tuples={} peak_tuples_steady={} (from t={}) final_tuples={}\n\
         max_item_gk_inserts={} row_birth_queries={}\n",
        report.algo,
        report.epsilon,
        report.m,
        report.n,
        report.items,
        timing.elapsed_secs,
        timing.items_per_sec,
        report.peak_tuples,
        report.peak_tuples_steady,
        report.steady_from_t,
        report.final_tuples,
        report.max_item_gk_inserts,
        report.row_birth_queries,
    );
    if let Some(f) = &report.flatness {
        out.push_str(&format!(
            "flatness: peak {} at n={} vs peak {} at n={} (ratio {:.4})\n",
            f.peak_small, f.n_small, f.peak_large, report.n, f.ratio
        ));
    }
    for row in &report.rows {
        out.push_str(&format!(
            "  row {}: active={} insertions={} tuples={}\n",
            row.r, row.active, row.gk_insertions, row.tuple_count
        ));
    }
    out
}

fn render_goodness(report: &GoodnessReport) -> String {
    let mut out = format!(
        "goodness: epsilon={} m={} n={} trials={} d={} recent_rows={:?}\n",
        report.epsilon, report.m, report.n, report.trials, report.d, report.recent_rows
    );
    out.push_str(
        "  r   probe_t  size_rate (predicted)  rank_rate (predicted)  mean_samples  sampled\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{:>3}  {:>8}  {:>9.4} ({:>9.2e})  {:>9.4} ({:>9.2e})  {:>12.1}  {}\n",
            r.r,
            r.probe_t,
            r.size_event_rate,
            r.predicted_size_rate,
            r.rank_event_rate,
            r.predicted_rank_rate,
            r.mean_samples,
            r.sampled
        ));
    }
    out
}
