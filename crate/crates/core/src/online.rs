//! Fully online quantile summary built from rows of sampled GK summaries.
//!
//! The stream length is unknown, so no single sampling rate works forever.
//! Instead the summary runs a ladder of *rows*. Row `r` is responsible for a
//! window of the first `2^r * 32m` items: it downsamples its input at rate
//! `1/(2^r * 32)` and feeds the survivors into its own GK summary at an eighth
//! of the target error. Row 0 is special: it is unsampled, answers queries
//! from the very first item, and covers the first `32m` items outright.
//!
//! Rows are born lazily. Row `r >= 1` is allocated once `2^(r-1) * m` items
//! have arrived, at which point 1/64 of its window has already passed. That
//! missing prefix is replaced by a synthetic stream: the previous row's GK
//! summary is queried at `ceil(8/eps)` evenly spaced ranks and each answer
//! stands in for an equal share of the missing items. The synthetic prefix is
//! stored in `O(1/eps)` words as (values, duplication count) and is replayed
//! one item per timestep alongside the live stream, so no timestep ever does
//! more than a constant amount of feeding work.
//!
//! Exactly one row is *active* (designated to answer queries) at any time:
//! row 0 for `t <= 32m`, then row `r` for `2^r*16m < t <= 2^r*32m`. A row is
//! *live* (holds memory) from its birth until `t = 2^r * 32m`; at most six
//! rows are live simultaneously. For `r >= 1` the GK summary stops accepting
//! after `2m` insertions, which caps total memory deterministically no matter
//! how unlikely a sampling spike is.
//!
//! A query `rho` is translated into the active row's sample domain by
//! dividing by `2^r * 32` (round half up, clamp into the range the sample
//! covers) and answered by that row's GK summary.

use serde::Serialize;

use crate::error::SummaryError;
use crate::gk::GkSummary;
use crate::sampler::BernoulliSampler;

/// Parameters of the online summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnlineConfig {
    epsilon: f64,
    m: u64,
    seed: u64,
    sample_row_zero: bool,
}

impl OnlineConfig {
    /// `epsilon` in (0, 1/2], `1 <= m <= 2^57`. Scales with `m >= 64` and
    /// `m * epsilon >= 512` keep every replacement-rank at least 1 without
    /// rounding; smaller settings are accepted and rounded. The upper bound
    /// keeps the row windows (up to `2^r * 32 m` for streams below 2^62
    /// items) inside u64 arithmetic.
    pub fn new(epsilon: f64, m: u64, seed: u64) -> Result<Self, SummaryError> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(SummaryError::InvalidEpsilon(epsilon));
        }
        if m == 0 || m > 1 << 57 {
            return Err(SummaryError::InvalidRowSize(m));
        }
        Ok(OnlineConfig {
            epsilon,
            m,
            seed,
            sample_row_zero: false,
        })
    }

    /// Experimental: also downsample row 0 at rate 1/32 and divide its
    /// queries by 32. This matches a uniform per-row rule but gives up the
    /// exact early answers and the deterministic row-0 query path; no error
    /// claim is made for it.
    pub fn with_sampled_row_zero(mut self) -> Self {
        self.sample_row_zero = true;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_row_zero(&self) -> bool {
        self.sample_row_zero
    }
}

/// Sample size at which the whole-stream guarantee holds with probability
/// `1 - e^(-1/eps)`: `ceil(400000 * ln(1/eps) / eps^2)`. About 9.2e7 at
/// eps = 0.1; documented for context, never enforced.
pub fn conservative_m(epsilon: f64) -> u64 {
    (400_000.0 * (1.0 / epsilon).ln() / (epsilon * epsilon)).ceil() as u64
}

/// Synthetic stand-in for the prefix a late-born row never saw.
///
/// Holds `q_len` distinct values; value `q` implicitly repeats `dup` times
/// (the last block absorbs rounding so the implicit length is exactly
/// `2^(r-1) * m`). Item `i` (1-based) is `q_values[min(ceil(i/dup), q_len)]`.
/// One item is consumed per timestep while the queue lasts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementQueue<T> {
    q_values: Vec<T>,
    dup: u64,
    total: u64,
    consumed: u64,
}

impl<T: Copy> ReplacementQueue<T> {
    /// Queue with no values: consumption arithmetic still runs, nothing is
    /// ever produced. Used when the previous row's summary was empty at
    /// hand-off time, which only happens at toy scales.
    pub(crate) fn empty(total: u64) -> Self {
        ReplacementQueue {
            q_values: Vec::new(),
            dup: 1,
            total,
            consumed: 0,
        }
    }

    pub fn q_len(&self) -> usize {
        self.q_values.len()
    }

    /// The distinct values, in non-decreasing order.
    pub fn values(&self) -> &[T] {
        &self.q_values
    }

    pub fn dup(&self) -> u64 {
        self.dup
    }

    /// Implicit length, `2^(r-1) * m`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    /// The `idx`-th implicit item, 1-based.
    pub fn item_at(&self, idx: u64) -> T {
        assert!(idx >= 1 && idx <= self.total, "index {} out of range", idx);
        assert!(!self.q_values.is_empty(), "empty replacement queue");
        let block = idx.div_ceil(self.dup).min(self.q_values.len() as u64);
        self.q_values[(block - 1) as usize]
    }

    /// Consumes one implicit item. `None` once exhausted, or when the queue
    /// holds no values (consumption still advances in that case).
    fn advance(&mut self) -> Option<T> {
        if self.consumed == self.total {
            return None;
        }
        self.consumed += 1;
        if self.q_values.is_empty() {
            None
        } else {
            Some(self.item_at(self.consumed))
        }
    }
}

/// Builds row `r`'s replacement prefix from the previous row's GK summary.
///
/// Queries ranks `rho_q = max(1, round(q * eps * m / 512))` for
/// `q = 1..=ceil(8/eps)` and duplicates each answer
/// `round(2^(r-1) * eps * m / 8)` times, with the final block absorbing the
/// rounding remainder so the implicit length is exactly `2^(r-1) * m`.
pub fn generate_replacement<T: Ord + Copy>(
    gk_prev: &GkSummary<T>,
    epsilon: f64,
    m: u64,
    r: u32,
) -> Result<ReplacementQueue<T>, SummaryError> {
    assert!(r >= 1, "row 0 has no replacement prefix");
    if gk_prev.count() == 0 {
        return Err(SummaryError::Empty);
    }
    let q_count = (8.0 / epsilon).ceil() as u64;
    let mut q_values = Vec::with_capacity(q_count as usize);
    for q in 1..=q_count {
        let rho = ((q as f64 * epsilon * m as f64) / 512.0).round().max(1.0) as u64;
        q_values.push(gk_prev.query(rho)?);
    }
    let total = m
        .checked_shl(r - 1)
        .expect("2^(r-1) * m overflows u64; stream out of supported range");
    let dup_f = ((1u128 << (r - 1)) as f64 * epsilon * m as f64 / 8.0).round();
    let dup = (dup_f as u64).max(1);
    Ok(ReplacementQueue {
        q_values,
        dup,
        total,
        consumed: 0,
    })
}

struct Row<T> {
    r: u32,
    active: bool,
    gk: GkSummary<T>,
    sampler: BernoulliSampler,
    replacement: Option<ReplacementFeed<T>>,
    gk_insertions: u64,
    insertion_cap: Option<u64>,
    trace_idx: Option<usize>,
}

struct ReplacementFeed<T> {
    queue: ReplacementQueue<T>,
    sampler: BernoulliSampler,
}

impl<T: Ord + Copy> Row<T> {
    fn row_zero(cfg: &OnlineConfig) -> Self {
        let sampler = if cfg.sample_row_zero {
            BernoulliSampler::new(1, 32, mix_seed(cfg.seed, 0)).expect("valid rate")
        } else {
            BernoulliSampler::pass_through(mix_seed(cfg.seed, 0))
        };
        Row {
            r: 0,
            active: true,
            gk: GkSummary::new(cfg.epsilon / 8.0).expect("epsilon/8 is valid"),
            sampler,
            replacement: None,
            gk_insertions: 0,
            // Row 0's input size is bounded by 32m deterministically, so it
            // needs no insertion cap.
            insertion_cap: None,
            trace_idx: None,
        }
    }

    fn spawn(
        r: u32,
        cfg: &OnlineConfig,
        queue: ReplacementQueue<T>,
        trace_idx: Option<usize>,
    ) -> Self {
        let den = 32u128 << r;
        Row {
            r,
            active: false,
            gk: GkSummary::new(cfg.epsilon / 8.0).expect("epsilon/8 is valid"),
            sampler: BernoulliSampler::new(1, den, mix_seed(cfg.seed, 2 * r as u64))
                .expect("valid rate"),
            replacement: Some(ReplacementFeed {
                queue,
                sampler: BernoulliSampler::new(1, den, mix_seed(cfg.seed, 2 * r as u64 + 1))
                    .expect("valid rate"),
            }),
            gk_insertions: 0,
            insertion_cap: Some(2 * cfg.m),
            trace_idx,
        }
    }

    fn below_cap(&self) -> bool {
        self.insertion_cap
            .is_none_or(|cap| self.gk_insertions < cap)
    }

    fn feed(&mut self, x: T) -> bool {
        if self.below_cap() {
            self.gk.insert(x);
            self.gk_insertions += 1;
            true
        } else {
            false
        }
    }

    fn query_divisor(&self, cfg: &OnlineConfig) -> u128 {
        if self.r == 0 && !cfg.sample_row_zero {
            1
        } else {
            32u128 << self.r
        }
    }
}

/// Per-row slice of an [`OnlineStats`] snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowStats {
    pub r: u32,
    pub active: bool,
    pub gk_insertions: u64,
    pub gk_count: u64,
    pub tuple_count: usize,
    pub replacement: Option<ReplacementStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplacementStats {
    pub q_len: usize,
    pub dup: u64,
    pub total: u64,
    pub consumed: u64,
}

/// Exact snapshot of the clock, the live rows, and their sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineStats {
    pub t: u64,
    pub active_row: u32,
    pub total_tuples: usize,
    pub rows: Vec<RowStats>,
}

/// Cheap copy of the active row's GK summary, for readers on other threads.
#[derive(Debug, Clone)]
pub struct RowSnapshot<T> {
    t: u64,
    r: u32,
    divisor: u128,
    gk: GkSummary<T>,
}

impl<T: Ord + Copy> RowSnapshot<T> {
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn row(&self) -> u32 {
        self.r
    }

    pub fn query(&self, rho: u64) -> Result<T, SummaryError> {
        translate_and_query(&self.gk, self.r, self.divisor, rho, self.t)
    }
}

/// Everything a memory-unbounded diagnostic run records: the raw stream plus,
/// per sampled row, every accepted sample (uncapped) and the replacement
/// queue as built at birth.
#[derive(Debug, Clone)]
pub struct OnlineTrace<T> {
    pub stream: Vec<T>,
    pub rows: Vec<RowTrace<T>>,
}

impl<T> Default for OnlineTrace<T> {
    fn default() -> Self {
        OnlineTrace {
            stream: Vec::new(),
            rows: Vec::new(),
        }
    }
}

/// Diagnostic record for one row with index `r >= 1`.
#[derive(Debug, Clone)]
pub struct RowTrace<T> {
    pub r: u32,
    /// Timestep at the end of which the row was allocated, `2^(r-1) * m`.
    pub alloc_t: u64,
    /// Accepted samples in acceptance order, tagged with their timestep.
    /// Includes accepts beyond the insertion cap.
    pub samples: Vec<(u64, T)>,
    pub queue: ReplacementQueue<T>,
}

/// Online rank/quantile summary over a stream of unknown length.
pub struct OnlineSummary<T> {
    config: OnlineConfig,
    t: u64,
    rows: Vec<Row<T>>,
    lifetime_gk_insertions: u64,
    trace: Option<OnlineTrace<T>>,
}

impl<T: Ord + Copy> OnlineSummary<T> {
    pub fn new(config: OnlineConfig) -> Self {
        OnlineSummary {
            rows: vec![Row::row_zero(&config)],
            config,
            t: 0,
            lifetime_gk_insertions: 0,
            trace: None,
        }
    }

    /// Like [`new`](Self::new) but records the full stream and every row's
    /// sample stream for after-the-fact diagnostics. Memory-unbounded; test
    /// scales only.
    pub fn with_recording(config: OnlineConfig) -> Self {
        let mut s = Self::new(config);
        s.trace = Some(OnlineTrace::default());
        s
    }

    pub fn config(&self) -> &OnlineConfig {
        &self.config
    }

    /// Items seen so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn live_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn active_row_index(&self) -> u32 {
        self.active_row().r
    }

    pub fn total_tuples(&self) -> usize {
        self.rows.iter().map(|r| r.gk.tuple_count()).sum()
    }

    /// GK insertions performed across all live rows.
    pub fn total_gk_insertions(&self) -> u64 {
        self.rows.iter().map(|r| r.gk_insertions).sum()
    }

    /// GK insertions performed since construction, retired rows included.
    /// Monotone; per-item deltas measure per-item work.
    pub fn lifetime_gk_insertions(&self) -> u64 {
        self.lifetime_gk_insertions
    }

    pub fn trace(&self) -> Option<&OnlineTrace<T>> {
        self.trace.as_ref()
    }

    fn active_row(&self) -> &Row<T> {
        self.rows
            .iter()
            .find(|r| r.active)
            .expect("exactly one live row is active")
    }

    /// Feeds the next stream item and advances the row schedule. For the new
    /// timestep t, in order: offer the item to every live row's sampler;
    /// replay one replacement item per feeding row under an independent coin;
    /// allocate row r at t = 2^(r-1)*m; hand the active flag from r-1 to r at
    /// t = 2^r*16m; retire row r at t = 2^r*32m.
    pub fn insert(&mut self, x: T) {
        self.t += 1;
        let t = self.t;
        let m = self.config.m;

        if let Some(trace) = &mut self.trace {
            trace.stream.push(x);
        }

        let trace = &mut self.trace;
        let mut fed = 0u64;
        for row in &mut self.rows {
            if row.sampler.offer() {
                if let (Some(trace), Some(idx)) = (trace.as_mut(), row.trace_idx) {
                    trace.rows[idx].samples.push((t, x));
                }
                fed += row.feed(x) as u64;
            }
        }

        for row in &mut self.rows {
            let mut accepted = None;
            if let Some(feed) = &mut row.replacement {
                if let Some(item) = feed.queue.advance() {
                    if feed.sampler.offer() {
                        accepted = Some(item);
                    }
                }
            }
            if let Some(item) = accepted {
                if let (Some(trace), Some(idx)) = (trace.as_mut(), row.trace_idx) {
                    trace.rows[idx].samples.push((t, item));
                }
                fed += row.feed(item) as u64;
            }
        }
        self.lifetime_gk_insertions += fed;

        if let Some(r) = pow2_multiple(t, m).map(|k| k + 1) {
            self.spawn_row(r, t);
        }

        if let Some(r) = pow2_multiple(t, 16 * m).filter(|&r| r >= 1) {
            for row in &mut self.rows {
                if row.r == r {
                    row.active = true;
                } else if row.r + 1 == r {
                    debug_assert!(row.active, "hand-off from an inactive row");
                    row.active = false;
                }
            }
        }

        if let Some(r) = pow2_multiple(t, 32 * m) {
            self.rows.retain(|row| row.r != r);
        }
    }

    fn spawn_row(&mut self, r: u32, t: u64) {
        debug_assert_eq!(t, self.config.m << (r - 1));
        let prev = self
            .rows
            .iter()
            .find(|row| row.r == r - 1)
            .expect("previous row is live at spawn time");
        let total = self.config.m << (r - 1);
        let queue = if prev.gk.count() == 0 {
            // Possible only when m is tiny; the prefix carries no information
            // but its consumption schedule must still run.
            ReplacementQueue::empty(total)
        } else {
            generate_replacement(&prev.gk, self.config.epsilon, self.config.m, r)
                .expect("previous summary is non-empty")
        };
        let trace_idx = self.trace.as_mut().map(|trace| {
            trace.rows.push(RowTrace {
                r,
                alloc_t: t,
                samples: Vec::new(),
                queue: queue.clone(),
            });
            trace.rows.len() - 1
        });
        self.rows
            .push(Row::spawn(r, &self.config, queue, trace_idx));
    }

    /// Answers a rank query `rho` (clamped to `[1, t]`) from the active row.
    pub fn query(&self, rho: u64) -> Result<T, SummaryError> {
        if self.t == 0 {
            return Err(SummaryError::Empty);
        }
        let row = self.active_row();
        translate_and_query(&row.gk, row.r, row.query_divisor(&self.config), rho, self.t)
    }

    /// Answers a quantile query `phi` in (0, 1] as rank `max(1, round(phi*t))`.
    pub fn query_phi(&self, phi: f64) -> Result<T, SummaryError> {
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(SummaryError::InvalidPhi(phi));
        }
        if self.t == 0 {
            return Err(SummaryError::Empty);
        }
        let rho = ((phi * self.t as f64).round() as u64).max(1);
        self.query(rho)
    }

    /// Copies the active row's summary so another thread can keep answering
    /// queries for the current prefix while inserts continue here.
    pub fn snapshot(&self) -> Result<RowSnapshot<T>, SummaryError> {
        if self.t == 0 {
            return Err(SummaryError::Empty);
        }
        let row = self.active_row();
        Ok(RowSnapshot {
            t: self.t,
            r: row.r,
            divisor: row.query_divisor(&self.config),
            gk: row.gk.clone(),
        })
    }

    pub fn stats(&self) -> OnlineStats {
        OnlineStats {
            t: self.t,
            active_row: self.active_row().r,
            total_tuples: self.total_tuples(),
            rows: self
                .rows
                .iter()
                .map(|row| RowStats {
                    r: row.r,
                    active: row.active,
                    gk_insertions: row.gk_insertions,
                    gk_count: row.gk.count(),
                    tuple_count: row.gk.tuple_count(),
                    replacement: row.replacement.as_ref().map(|feed| ReplacementStats {
                        q_len: feed.queue.q_len(),
                        dup: feed.queue.dup(),
                        total: feed.queue.total(),
                        consumed: feed.queue.consumed(),
                    }),
                })
                .collect(),
        }
    }
}

fn translate_and_query<T: Ord + Copy>(
    gk: &GkSummary<T>,
    row: u32,
    divisor: u128,
    rho: u64,
    t: u64,
) -> Result<T, SummaryError> {
    if gk.count() == 0 {
        return Err(SummaryError::EmptyActiveRow { row });
    }
    let target = rho.clamp(1, t) as u128;
    let scaled = ((2 * target + divisor) / (2 * divisor)) as u64;
    gk.query(scaled.clamp(1, gk.count()))
}

/// `Some(k)` iff `t == base << k`.
fn pow2_multiple(t: u64, base: u64) -> Option<u32> {
    if t < base || !t.is_multiple_of(base) {
        return None;
    }
    let q = t / base;
    q.is_power_of_two().then(|| q.trailing_zeros())
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt ^ 0xA076_1D64_78BD_642F))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
