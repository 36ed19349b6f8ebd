//! Per-row sample-stream health probe, run in the memory-unbounded recording
//! mode of the online summary.
//!
//! A row's sample stream is judged at its hand-off time `t_r+1 = 2^r * m`
//! (clamped to the horizon) on two events:
//!
//!   * size blow-up: more than `2m` samples were accepted by then;
//!   * rank deviation: some early sample `z` (among the first `2m`) has
//!     `|2^r * 32 * rank(z, S_r) - rank(z, Y_r)| > eps * t / 8`, where `Y_r`
//!     is the row's notional input (replacement prefix followed by the live
//!     suffix).
//!
//! A row whose window passed with neither event is *good*; the error story of
//! the online summary only needs the last `log2(1/eps)` rows to be good. The
//! unsampled row 0 is good by construction and reported as such.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::QsError;
use crate::online::{OnlineConfig, OnlineSummary, ReplacementQueue, RowTrace};
use crate::stream::StreamSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodnessConfig {
    pub epsilon: f64,
    pub m: u64,
    pub n: u64,
    pub seed: u64,
    pub trials: u32,
    pub stream: StreamSpec,
}

/// Event frequencies for one row, aggregated over trials.
#[derive(Debug, Clone, Serialize)]
pub struct RowGoodness {
    pub r: u32,
    /// Time the events are evaluated at: min(2^r * m, n).
    pub probe_t: u64,
    pub trials: u32,
    pub size_events: u32,
    pub size_event_rate: f64,
    /// Tail bound exp(-m/192) for the size event.
    pub predicted_size_rate: f64,
    pub rank_events: u32,
    pub rank_event_rate: f64,
    /// Union bound min(1, 4m * exp(-eps^2 m / 12288)) for the rank event.
    pub predicted_rank_rate: f64,
    pub mean_samples: f64,
    /// False for the unsampled row 0, whose events cannot occur.
    pub sampled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GoodnessReport {
    pub epsilon: f64,
    pub m: u64,
    pub n: u64,
    pub seed: u64,
    pub trials: u32,
    pub stream: StreamSpec,
    /// log2(1/eps), rounded up: how many trailing rows the guarantee leans on.
    pub d: u32,
    /// The d most recently born rows at the horizon.
    pub recent_rows: Vec<u32>,
    pub rows: Vec<RowGoodness>,
}

impl GoodnessReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(
            "r,probe_t,trials,size_events,size_event_rate,predicted_size_rate,rank_events,rank_event_rate,predicted_rank_rate,mean_samples,sampled\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                row.r,
                row.probe_t,
                row.trials,
                row.size_events,
                row.size_event_rate,
                row.predicted_size_rate,
                row.rank_events,
                row.rank_event_rate,
                row.predicted_rank_rate,
                row.mean_samples,
                row.sampled
            ));
        }
        out
    }
}

struct RowOutcome {
    r: u32,
    size_event: bool,
    rank_event: bool,
    samples: u64,
}

/// Number of implicit replacement items with value <= z.
fn replacement_count_le(queue: &ReplacementQueue<i64>, z: i64) -> u64 {
    let values = queue.values();
    if values.is_empty() {
        return 0;
    }
    let blocks_le = values.partition_point(|&v| v <= z) as u64;
    if blocks_le == values.len() as u64 {
        queue.total()
    } else {
        (queue.dup() * blocks_le).min(queue.total())
    }
}

fn judge_row(
    trace_row: &RowTrace<i64>,
    stream: &[i64],
    epsilon: f64,
    m: u64,
    horizon: u64,
) -> RowOutcome {
    let probe_t = (m << trace_row.r).min(horizon);
    let upto = trace_row.samples.partition_point(|&(t, _)| t <= probe_t);
    let samples: Vec<i64> = trace_row.samples[..upto].iter().map(|&(_, v)| v).collect();
    let size_event = samples.len() as u64 > 2 * m;

    let mut sample_sorted = samples.clone();
    sample_sorted.sort_unstable();
    let mut suffix: Vec<i64> = stream[trace_row.alloc_t as usize..probe_t as usize].to_vec();
    suffix.sort_unstable();

    let scale = 32u128 << trace_row.r;
    let allowed = epsilon * probe_t as f64 / 8.0;
    let first = samples.len().min(2 * m as usize);
    let mut rank_event = false;
    for &z in &samples[..first] {
        let rank_s = sample_sorted.partition_point(|&v| v <= z) as u128;
        let rank_y = replacement_count_le(&trace_row.queue, z) as u128
            + suffix.partition_point(|&v| v <= z) as u128;
        let dev = (scale * rank_s).abs_diff(rank_y);
        if dev as f64 > allowed {
            rank_event = true;
            break;
        }
    }
    RowOutcome {
        r: trace_row.r,
        size_event,
        rank_event,
        samples: samples.len() as u64,
    }
}

/// Runs seeded recording trials and reports per-row event frequencies.
pub fn run_goodness(cfg: &GoodnessConfig) -> Result<GoodnessReport, QsError> {
    if cfg.trials == 0 {
        return Err(QsError::Config("trials must be at least 1".into()));
    }
    if cfg.stream.n != cfg.n {
        return Err(QsError::Config(format!(
            "stream length {} does not match n = {}",
            cfg.stream.n, cfg.n
        )));
    }
    // Validate parameters once before fanning out.
    OnlineConfig::new(cfg.epsilon, cfg.m, cfg.seed)?;

    let per_trial: Vec<Vec<RowOutcome>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<RowOutcome>, QsError> {
            let spec = cfg
                .stream
                .with_seed(cfg.stream.seed.wrapping_add(trial as u64));
            let trial_config =
                OnlineConfig::new(cfg.epsilon, cfg.m, cfg.seed.wrapping_add(trial as u64))?;
            let mut summary = OnlineSummary::with_recording(trial_config);
            for x in spec.iter()? {
                summary.insert(x);
            }
            let trace = summary.trace().expect("recording enabled");
            Ok(trace
                .rows
                .iter()
                .map(|row| judge_row(row, &trace.stream, cfg.epsilon, cfg.m, summary.t()))
                .collect())
        })
        .collect::<Result<_, QsError>>()?;

    let max_r = per_trial
        .iter()
        .flat_map(|rows| rows.iter().map(|o| o.r))
        .max()
        .unwrap_or(0);

    let mut rows = vec![RowGoodness {
        r: 0,
        probe_t: cfg.m.min(cfg.n),
        trials: cfg.trials,
        size_events: 0,
        size_event_rate: 0.0,
        predicted_size_rate: (-(cfg.m as f64) / 192.0).exp(),
        rank_events: 0,
        rank_event_rate: 0.0,
        predicted_rank_rate: predicted_rank_rate(cfg.epsilon, cfg.m),
        mean_samples: cfg.m.min(cfg.n) as f64,
        sampled: false,
    }];
    for r in 1..=max_r {
        let mut size_events = 0u32;
        let mut rank_events = 0u32;
        let mut sample_sum = 0u64;
        let mut seen = 0u32;
        for trial in &per_trial {
            if let Some(o) = trial.iter().find(|o| o.r == r) {
                seen += 1;
                size_events += o.size_event as u32;
                rank_events += o.rank_event as u32;
                sample_sum += o.samples;
            }
        }
        rows.push(RowGoodness {
            r,
            probe_t: (cfg.m << r).min(cfg.n),
            trials: seen,
            size_events,
            size_event_rate: size_events as f64 / seen.max(1) as f64,
            predicted_size_rate: (-(cfg.m as f64) / 192.0).exp(),
            rank_events,
            rank_event_rate: rank_events as f64 / seen.max(1) as f64,
            predicted_rank_rate: predicted_rank_rate(cfg.epsilon, cfg.m),
            mean_samples: sample_sum as f64 / seen.max(1) as f64,
            sampled: true,
        });
    }

    let d = (1.0 / cfg.epsilon).log2().ceil().max(1.0) as u32;
    let all_rows: Vec<u32> = (0..=max_r).collect();
    let recent_rows = all_rows
        .iter()
        .rev()
        .take(d as usize)
        .rev()
        .copied()
        .collect();

    Ok(GoodnessReport {
        epsilon: cfg.epsilon,
        m: cfg.m,
        n: cfg.n,
        seed: cfg.seed,
        trials: cfg.trials,
        stream: cfg.stream.clone(),
        d,
        recent_rows,
        rows,
    })
}

fn predicted_rank_rate(epsilon: f64, m: u64) -> f64 {
    (4.0 * m as f64 * (-(epsilon * epsilon * m as f64) / 12288.0).exp()).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::StreamKind;

    #[test]
    fn row_zero_reports_no_events() {
        let cfg = GoodnessConfig {
            epsilon: 0.25,
            m: 128,
            n: 20_000,
            seed: 1,
            trials: 4,
            stream: StreamSpec::new(StreamKind::Uniform { lo: 0, hi: 1 << 30 }, 20_000, 2),
        };
        let report = run_goodness(&cfg).unwrap();
        let row0 = &report.rows[0];
        assert!(!row0.sampled);
        assert_eq!(row0.size_events, 0);
        assert_eq!(row0.rank_events, 0);
        assert_eq!(report.d, 2);
        assert!(report.rows.len() > 1);
        for row in &report.rows {
            assert!(row.size_event_rate >= 0.0 && row.size_event_rate <= 1.0);
            assert!(row.rank_event_rate >= 0.0 && row.rank_event_rate <= 1.0);
        }
    }

    #[test]
    fn recent_rows_lists_the_last_d() {
        let cfg = GoodnessConfig {
            epsilon: 0.25,
            m: 64,
            n: 32_768,
            seed: 3,
            trials: 2,
            stream: StreamSpec::new(StreamKind::Sorted, 32_768, 0),
        };
        let report = run_goodness(&cfg).unwrap();
        assert_eq!(report.d, 2);
        let max_r = report.rows.iter().map(|r| r.r).max().unwrap();
        assert_eq!(report.recent_rows, vec![max_r - 1, max_r]);
    }

    #[test]
    fn replacement_count_is_consistent_with_item_at() {
        let mut gk = crate::gk::GkSummary::new(0.0625).unwrap();
        for x in 1..=1024i64 {
            gk.insert(x);
        }
        let queue = crate::online::generate_replacement(&gk, 0.5, 1024, 2).unwrap();
        for z in [i64::MIN, 0, 5, 63, 64, 1000, i64::MAX] {
            let brute = (1..=queue.total())
                .filter(|&i| queue.item_at(i) <= z)
                .count() as u64;
            assert_eq!(replacement_count_le(&queue, z), brute, "z = {}", z);
        }
    }
}
