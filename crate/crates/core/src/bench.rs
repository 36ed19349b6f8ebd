//! Throughput and space measurement. The serialized report carries only
//! deterministic quantities (tuple counts, insertion counts, per-item work),
//! so identical flags produce identical bytes; wall-clock timing is returned
//! separately for human display.

use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::QsError;
use crate::eval::{resolve_m, resolve_reservoir_k, Algorithm, Driver};
use crate::online::RowStats;
use crate::stream::StreamSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub algo: Algorithm,
    pub epsilon: f64,
    pub m: Option<u64>,
    pub n: u64,
    pub seed: u64,
    pub stream: StreamSpec,
    /// Also run at n/10 and compare steady-state space peaks.
    pub flatness: bool,
    pub reservoir_k: Option<usize>,
}

/// Steady-state space comparison between two stream lengths.
#[derive(Debug, Clone, Serialize)]
pub struct FlatnessReport {
    pub n_small: u64,
    pub peak_small: usize,
    pub peak_large: usize,
    /// peak_large / peak_small; near 1.0 when space does not grow with n.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub algo: String,
    pub epsilon: f64,
    pub m: u64,
    pub n: u64,
    pub seed: u64,
    pub stream: StreamSpec,
    pub items: u64,
    /// Highest live tuple count seen at any timestep.
    pub peak_tuples: usize,
    /// Peak restricted to t past the first row window (32m); equals
    /// peak_tuples for non-online summaries.
    pub peak_tuples_steady: usize,
    pub steady_from_t: u64,
    pub final_tuples: usize,
    /// Most GK insertions any single timestep performed.
    pub max_item_gk_inserts: u64,
    /// Histogram of GK insertions per timestep; index i counts timesteps that
    /// did i insertions, the last bucket collects everything at or above it.
    pub work_histogram: Vec<u64>,
    /// One-time GK queries issued when a row is born, ceil(8/eps).
    pub row_birth_queries: u64,
    /// Final live rows (online only).
    pub rows: Vec<RowStats>,
    pub flatness: Option<FlatnessReport>,
}

impl BenchReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "algo,epsilon,m,n,items,peak_tuples,peak_tuples_steady,steady_from_t,final_tuples,max_item_gk_inserts,row_birth_queries,flatness_ratio\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.algo,
            self.epsilon,
            self.m,
            self.n,
            self.items,
            self.peak_tuples,
            self.peak_tuples_steady,
            self.steady_from_t,
            self.final_tuples,
            self.max_item_gk_inserts,
            self.row_birth_queries,
            self.flatness
                .as_ref()
                .map(|f| f.ratio.to_string())
                .unwrap_or_default()
        ));
        out
    }
}

/// Wall-clock side channel; never serialized into the report.
#[derive(Debug, Clone, Copy)]
pub struct BenchTiming {
    pub elapsed_secs: f64,
    pub items_per_sec: f64,
}

struct PassOutcome {
    items: u64,
    peak: usize,
    peak_steady: usize,
    final_tuples: usize,
    max_item_inserts: u64,
    histogram: Vec<u64>,
    rows: Vec<RowStats>,
    elapsed_secs: f64,
}

const HIST_BUCKETS: usize = 16;

#[allow(clippy::too_many_arguments)]
fn run_pass(
    algo: Algorithm,
    epsilon: f64,
    m: u64,
    n: u64,
    seed: u64,
    stream: &StreamSpec,
    reservoir_k: usize,
    steady_from: u64,
) -> Result<PassOutcome, QsError> {
    let spec = StreamSpec {
        kind: stream.kind.clone(),
        n,
        seed: stream.seed,
    };
    let mut driver = Driver::new(algo, epsilon, m, n, seed, reservoir_k)?;
    let mut peak = 0usize;
    let mut peak_steady = 0usize;
    let mut max_item_inserts = 0u64;
    let mut histogram = vec![0u64; HIST_BUCKETS];
    let mut prev_insertions = 0u64;
    let mut t = 0u64;
    let started = Instant::now();
    for x in spec.iter()? {
        t += 1;
        driver.insert(x)?;
        let tuples = driver.tuple_count();
        peak = peak.max(tuples);
        if t > steady_from {
            peak_steady = peak_steady.max(tuples);
        }
        let insertions = match &driver {
            Driver::Online(s) => s.lifetime_gk_insertions(),
            _ => t,
        };
        let delta = insertions - prev_insertions;
        prev_insertions = insertions;
        max_item_inserts = max_item_inserts.max(delta);
        histogram[(delta as usize).min(HIST_BUCKETS - 1)] += 1;
    }
    let elapsed_secs = started.elapsed().as_secs_f64();
    Ok(PassOutcome {
        items: t,
        peak,
        peak_steady: if peak_steady == 0 { peak } else { peak_steady },
        final_tuples: driver.tuple_count(),
        max_item_inserts,
        histogram,
        rows: match &driver {
            Driver::Online(s) => s.stats().rows,
            _ => Vec::new(),
        },
        elapsed_secs,
    })
}

/// Runs the configured summary over the stream, tracking space and per-item
/// work. With `flatness` set, an extra pass at n/10 measures whether the
/// steady-state space peak moved with the stream length.
pub fn run_bench(cfg: &BenchConfig) -> Result<(BenchReport, BenchTiming), QsError> {
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
    let steady_from = if cfg.algo == Algorithm::Online {
        32 * m
    } else {
        0
    };
    let main = run_pass(
        cfg.algo,
        cfg.epsilon,
        m,
        cfg.n,
        cfg.seed,
        &cfg.stream,
        reservoir_k,
        steady_from,
    )?;

    let flatness = if cfg.flatness {
        let n_small = cfg.n / 10;
        if n_small > steady_from && n_small > 0 {
            let small = run_pass(
                cfg.algo,
                cfg.epsilon,
                m,
                n_small,
                cfg.seed,
                &cfg.stream,
                reservoir_k,
                steady_from,
            )?;
            Some(FlatnessReport {
                n_small,
                peak_small: small.peak_steady,
                peak_large: main.peak_steady,
                ratio: main.peak_steady as f64 / small.peak_steady.max(1) as f64,
            })
        } else {
            None
        }
    } else {
        None
    };

    let report = BenchReport {
        algo: cfg.algo.name().to_string(),
        epsilon: cfg.epsilon,
        m,
        n: cfg.n,
        seed: cfg.seed,
        stream: cfg.stream.clone(),
        items: main.items,
        peak_tuples: main.peak,
        peak_tuples_steady: main.peak_steady,
        steady_from_t: steady_from,
        final_tuples: main.final_tuples,
        max_item_gk_inserts: main.max_item_inserts,
        work_histogram: main.histogram,
        row_birth_queries: (8.0 / cfg.epsilon).ceil() as u64,
        rows: main.rows,
        flatness,
    };
    let timing = BenchTiming {
        elapsed_secs: main.elapsed_secs,
        items_per_sec: main.items as f64 / main.elapsed_secs.max(1e-9),
    };
    Ok((report, timing))
}
