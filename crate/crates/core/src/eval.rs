//! Oracle-backed error evaluation: run a summary over a generated stream,
//! query it at probe times across a quantile grid, and score every answer
//! against the exact oracle. Trials fan out across threads; aggregation is a
//! deterministic reduce ordered by trial index, so reports are byte-stable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{QsError, SummaryError};
use crate::fixed_n::{default_m, FixedNSummary};
use crate::gk::GkSummary;
use crate::online::{OnlineConfig, OnlineSummary};
use crate::oracle::ExactOracle;
use crate::reservoir::ReservoirSummary;
use crate::stream::StreamSpec;

/// Which summary the harness drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gk,
    FixedN,
    Online,
    ReservoirBaseline,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Gk => "gk",
            Algorithm::FixedN => "fixedn",
            Algorithm::Online => "online",
            Algorithm::ReservoirBaseline => "reservoir-baseline",
        }
    }

    /// The error target checked by the harness is `factor * eps * t` ranks.
    /// The sampled fixed-length composition targets half the headline error;
    /// everything else targets it directly.
    pub fn tolerance_factor(&self) -> f64 {
        match self {
            Algorithm::FixedN => 0.5,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gk" => Ok(Algorithm::Gk),
            "fixedn" => Ok(Algorithm::FixedN),
            "online" => Ok(Algorithm::Online),
            "reservoir-baseline" | "reservoir" => Ok(Algorithm::ReservoirBaseline),
            other => Err(format!(
                "unknown algorithm {:?} (expected gk|fixedn|online|reservoir-baseline)",
                other
            )),
        }
    }
}

/// One summary instance behind a uniform insert/query face.
pub(crate) enum Driver {
    Gk(GkSummary<i64>),
    FixedN(FixedNSummary<i64>),
    Online(OnlineSummary<i64>),
    Reservoir(ReservoirSummary<i64>),
}

impl Driver {
    pub(crate) fn new(
        algo: Algorithm,
        epsilon: f64,
        m: u64,
        n: u64,
        seed: u64,
        reservoir_k: usize,
    ) -> Result<Self, SummaryError> {
        Ok(match algo {
            Algorithm::Gk => Driver::Gk(GkSummary::new(epsilon)?),
            Algorithm::FixedN => Driver::FixedN(FixedNSummary::new(epsilon, n, m, seed)?),
            Algorithm::Online => {
                Driver::Online(OnlineSummary::new(OnlineConfig::new(epsilon, m, seed)?))
            }
            Algorithm::ReservoirBaseline => {
                Driver::Reservoir(ReservoirSummary::new(reservoir_k, seed)?)
            }
        })
    }

    pub(crate) fn insert(&mut self, x: i64) -> Result<(), SummaryError> {
        match self {
            Driver::Gk(s) => {
                s.insert(x);
                Ok(())
            }
            Driver::FixedN(s) => s.insert(x),
            Driver::Online(s) => {
                s.insert(x);
                Ok(())
            }
            Driver::Reservoir(s) => {
                s.insert(x);
                Ok(())
            }
        }
    }

    pub(crate) fn query(&self, rho: u64) -> Result<i64, SummaryError> {
        match self {
            Driver::Gk(s) => s.query(rho),
            Driver::FixedN(s) => s.query(rho).map(|a| a.value),
            Driver::Online(s) => s.query(rho),
            Driver::Reservoir(s) => s.query(rho),
        }
    }

    pub(crate) fn active_row(&self) -> Option<u32> {
        match self {
            Driver::Online(s) => Some(s.active_row_index()),
            _ => None,
        }
    }

    pub(crate) fn guaranteed(&self) -> Option<bool> {
        match self {
            Driver::FixedN(s) => Some(s.t() as u128 * 64 >= s.n() as u128),
            _ => None,
        }
    }

    pub(crate) fn tuple_count(&self) -> usize {
        match self {
            Driver::Gk(s) => s.tuple_count(),
            Driver::FixedN(s) => s.tuple_count(),
            Driver::Online(s) => s.total_tuples(),
            Driver::Reservoir(s) => s.len(),
        }
    }
}

/// Evaluation plan: summary config plus probe schedule and quantile grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub algo: Algorithm,
    pub epsilon: f64,
    pub m: Option<u64>,
    pub n: u64,
    pub seed: u64,
    pub stream: StreamSpec,
    pub probes: Vec<u64>,
    pub phis: Vec<f64>,
    pub trials: u32,
    pub reservoir_k: Option<usize>,
}

/// One scored query.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QueryRecord {
    pub t: u64,
    pub phi: f64,
    pub rho: u64,
    pub answer: i64,
    pub exact_rank: u64,
    pub abs_err: u64,
    pub norm_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecords {
    pub trial: u32,
    pub stream_seed: u64,
    pub summary_seed: u64,
    /// Queries the summary had no answer for yet (no sample accepted at a
    /// very early probe time).
    pub skipped: u64,
    pub records: Vec<QueryRecord>,
}

/// Errors at one probe time, aggregated over all trials and quantiles.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeAggregate {
    pub t: u64,
    pub queries: u64,
    pub failures: u64,
    pub failure_fraction: f64,
    pub max_norm_err: f64,
    pub mean_norm_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub algo: String,
    pub epsilon: f64,
    pub m: u64,
    pub n: u64,
    pub seed: u64,
    pub stream: StreamSpec,
    pub trials: u32,
    pub tolerance_factor: f64,
    pub reservoir_k: Option<usize>,
    pub probes: Vec<ProbeAggregate>,
    pub trial_records: Vec<TrialRecords>,
}

impl ErrorReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Per-query rows, one line each: t,phi,rho,answer,exact_rank,abs_err,norm_err.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,phi,rho,answer,exact_rank,abs_err,norm_err\n");
        for trial in &self.trial_records {
            for r in &trial.records {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.t, r.phi, r.rho, r.answer, r.exact_rank, r.abs_err, r.norm_err
                ));
            }
        }
        out
    }
}

/// Default quantile grid: 19 points, 0.05 through 0.95.
pub fn default_phis() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

/// Default probe schedule: powers of two, the row hand-off edges
/// `2^r * 16m` and their neighbors, and `n` itself.
pub fn default_probes(n: u64, m: u64) -> Vec<u64> {
    let mut probes = Vec::new();
    let mut p = 1u64;
    while p <= n {
        probes.push(p);
        match p.checked_mul(2) {
            Some(next) => p = next,
            None => break,
        }
    }
    for r in 1..=40u32 {
        match 16u64.checked_mul(m).and_then(|b| b.checked_shl(r)) {
            Some(edge) if edge <= n.saturating_add(1) => {
                for candidate in [edge.saturating_sub(1), edge, edge + 1] {
                    if (1..=n).contains(&candidate) {
                        probes.push(candidate);
                    }
                }
            }
            _ => break,
        }
    }
    probes.push(n);
    probes.sort_unstable();
    probes.dedup();
    probes
}

/// Explicit m passes through untouched (invalid values are rejected by the
/// summary constructors); the desk-scale default is additionally clamped to n
/// so the known-length summary accepts short streams.
pub(crate) fn resolve_m(cfg_m: Option<u64>, epsilon: f64, algo: Algorithm, n: u64) -> u64 {
    match cfg_m {
        Some(m) => m,
        None => {
            let m = default_m(epsilon);
            if algo == Algorithm::FixedN {
                m.min(n)
            } else {
                m
            }
        }
    }
}

/// Peak live tuple count of an online run over the given stream; the
/// space-matched budget handed to the reservoir baseline.
pub fn measure_online_peak(
    epsilon: f64,
    m: u64,
    seed: u64,
    stream: &StreamSpec,
) -> Result<usize, QsError> {
    let mut s = OnlineSummary::new(OnlineConfig::new(epsilon, m, seed)?);
    let mut peak = 0usize;
    for x in stream.iter()? {
        s.insert(x);
        peak = peak.max(s.total_tuples());
    }
    Ok(peak.max(1))
}

fn validate(cfg: &EvalConfig) -> Result<(), QsError> {
    if cfg.trials == 0 {
        return Err(QsError::Config("trials must be at least 1".into()));
    }
    if cfg.stream.n != cfg.n {
        return Err(QsError::Config(format!(
            "stream length {} does not match n = {}",
            cfg.stream.n, cfg.n
        )));
    }
    for &p in &cfg.probes {
        if p == 0 || p > cfg.n {
            return Err(QsError::Config(format!(
                "probe {} outside [1, {}]",
                p, cfg.n
            )));
        }
    }
    for &phi in &cfg.phis {
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(QsError::Config(format!("phi {} outside (0, 1]", phi)));
        }
    }
    Ok(())
}

pub(crate) fn resolve_reservoir_k(
    algo: Algorithm,
    requested: Option<usize>,
    epsilon: f64,
    m: u64,
    seed: u64,
    stream: &StreamSpec,
) -> Result<usize, QsError> {
    if algo != Algorithm::ReservoirBaseline {
        return Ok(1);
    }
    match requested {
        Some(k) if k > 0 => Ok(k),
        _ => measure_online_peak(epsilon, m, seed, stream),
    }
}

/// Runs `trials` seeded repetitions of the evaluation plan and aggregates
/// per-probe error statistics.
pub fn run_eval(cfg: &EvalConfig) -> Result<ErrorReport, QsError> {
    validate(cfg)?;
    let m = resolve_m(cfg.m, cfg.epsilon, cfg.algo, cfg.n);
    let mut probes = cfg.probes.clone();
    probes.sort_unstable();
    probes.dedup();
    let reservoir_k = resolve_reservoir_k(
        cfg.algo,
        cfg.reservoir_k,
        cfg.epsilon,
        m,
        cfg.seed,
        &cfg.stream,
    )?;

    let trial_records: Vec<TrialRecords> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, &probes, m, reservoir_k, trial))
        .collect::<Result<_, QsError>>()?;

    let factor = cfg.algo.tolerance_factor();
    let probes_agg = probes
        .iter()
        .map(|&t| {
            let mut queries = 0u64;
            let mut failures = 0u64;
            let mut max_norm = 0f64;
            let mut sum_norm = 0f64;
            for trial in &trial_records {
                for r in trial.records.iter().filter(|r| r.t == t) {
                    queries += 1;
                    sum_norm += r.norm_err;
                    max_norm = max_norm.max(r.norm_err);
                    if r.abs_err as f64 > factor * cfg.epsilon * t as f64 {
                        failures += 1;
                    }
                }
            }
            ProbeAggregate {
                t,
                queries,
                failures,
                failure_fraction: if queries == 0 {
                    0.0
                } else {
                    failures as f64 / queries as f64
                },
                max_norm_err: max_norm,
                mean_norm_err: if queries == 0 {
                    0.0
                } else {
                    sum_norm / queries as f64
                },
            }
        })
        .collect();

    Ok(ErrorReport {
        algo: cfg.algo.name().to_string(),
        epsilon: cfg.epsilon,
        m,
        n: cfg.n,
        seed: cfg.seed,
        stream: cfg.stream.clone(),
        trials: cfg.trials,
        tolerance_factor: factor,
        reservoir_k: (cfg.algo == Algorithm::ReservoirBaseline).then_some(reservoir_k),
        probes: probes_agg,
        trial_records,
    })
}

fn run_trial(
    cfg: &EvalConfig,
    probes: &[u64],
    m: u64,
    reservoir_k: usize,
    trial: u32,
) -> Result<TrialRecords, QsError> {
    let stream_seed = cfg.stream.seed.wrapping_add(trial as u64);
    let summary_seed = cfg.seed.wrapping_add(trial as u64);
    let spec = cfg.stream.with_seed(stream_seed);
    let mut driver = Driver::new(cfg.algo, cfg.epsilon, m, cfg.n, summary_seed, reservoir_k)?;
    let mut oracle = ExactOracle::new();
    let mut records = Vec::with_capacity(probes.len() * cfg.phis.len());
    let mut skipped = 0u64;
    let mut probe_idx = 0usize;
    let mut t = 0u64;
    for x in spec.iter()? {
        t += 1;
        driver.insert(x)?;
        oracle.insert(x);
        if probe_idx < probes.len() && probes[probe_idx] == t {
            probe_idx += 1;
            for &phi in &cfg.phis {
                let rho = ((phi * t as f64).round() as u64).max(1);
                let answer = match driver.query(rho) {
                    Ok(answer) => answer,
                    Err(SummaryError::Empty) | Err(SummaryError::EmptyActiveRow { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let exact_rank = oracle.rank(&answer);
                let abs_err = oracle.rank_error(&answer, rho);
                records.push(QueryRecord {
                    t,
                    phi,
                    rho,
                    answer,
                    exact_rank,
                    abs_err,
                    norm_err: abs_err as f64 / t as f64,
                });
            }
        }
    }
    if t < cfg.n {
        return Err(QsError::Config(format!(
            "stream ended at t = {} before n = {}",
            t, cfg.n
        )));
    }
    Ok(TrialRecords {
        trial,
        stream_seed,
        summary_seed,
        skipped,
        records,
    })
}

/// Plan for an ingest-and-answer run: explicit (t, phi) queries answered
/// inline while the stream is consumed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub algo: Algorithm,
    pub epsilon: f64,
    pub m: Option<u64>,
    pub n: u64,
    pub seed: u64,
    pub stream: StreamSpec,
    pub queries: Vec<(u64, f64)>,
    pub reservoir_k: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub t: u64,
    pub phi: f64,
    pub rho: u64,
    pub answer: i64,
    /// Active row for the online summary, absent otherwise.
    pub row: Option<u32>,
    /// Guarantee flag for the fixed-length summary, absent otherwise.
    pub guaranteed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algo: String,
    pub epsilon: f64,
    pub m: u64,
    pub n: u64,
    pub seed: u64,
    pub stream: StreamSpec,
    pub rows: Vec<RunRow>,
}

impl RunReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,phi,rho,answer,row,guaranteed\n");
        for r in &self.rows {
            let row = r.row.map(|v| v.to_string()).unwrap_or_default();
            let guaranteed = r.guaranteed.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.t, r.phi, r.rho, r.answer, row, guaranteed
            ));
        }
        out
    }
}

/// Ingests the stream once, answering each query at its timestep.
pub fn run_queries(cfg: &RunConfig) -> Result<RunReport, QsError> {
    for &(t, phi) in &cfg.queries {
        if t == 0 || t > cfg.n {
            return Err(QsError::Config(format!(
                "query time {} outside [1, {}]",
                t, cfg.n
            )));
        }
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(QsError::Config(format!("phi {} outside (0, 1]", phi)));
        }
    }
    if cfg.stream.n != cfg.n {
        return Err(QsError::Config(format!(
            "stream length {} does not match n = {}",
            cfg.stream.n, cfg.n
        )));
    }
    let m = resolve_m(cfg.m, cfg.epsilon, cfg.algo, cfg.n);
    let reservoir_k = resolve_reservoir_k(
        cfg.algo,
        cfg.reservoir_k,
        cfg.epsilon,
        m,
        cfg.seed,
        &cfg.stream,
    )?;
    let mut queries = cfg.queries.clone();
    queries.sort_by_key(|&(t, _)| t);

    let mut driver = Driver::new(cfg.algo, cfg.epsilon, m, cfg.n, cfg.seed, reservoir_k)?;
    let mut rows = Vec::with_capacity(queries.len());
    let mut qi = 0usize;
    let mut t = 0u64;
    for x in cfg.stream.iter()? {
        t += 1;
        driver.insert(x)?;
        while qi < queries.len() && queries[qi].0 == t {
            let phi = queries[qi].1;
            qi += 1;
            let rho = ((phi * t as f64).round() as u64).max(1);
            let answer = driver.query(rho)?;
            rows.push(RunRow {
                t,
                phi,
                rho,
                answer,
                row: driver.active_row(),
                guaranteed: driver.guaranteed(),
            });
        }
        if qi == queries.len() && t >= cfg.n {
            break;
        }
    }
    if qi < queries.len() {
        return Err(QsError::Config(format!(
            "stream ended at t = {} with {} queries unanswered",
            t,
            queries.len() - qi
        )));
    }
    Ok(RunReport {
        algo: cfg.algo.name().to_string(),
        epsilon: cfg.epsilon,
        m,
        n: cfg.n,
        seed: cfg.seed,
        stream: cfg.stream.clone(),
        rows,
    })
}
