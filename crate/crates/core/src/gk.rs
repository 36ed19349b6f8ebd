//! Deterministic quantile summary after Greenwald and Khanna.
//!
//! The summary keeps an ordered list of tuples `(value, g, delta)` over the
//! items inserted so far:
//!
//!   * `value` is an item retained from the stream,
//!   * `g` is the rank gap to the preceding tuple (`r_min(i) = sum of g[j], j <= i`),
//!   * `delta` is the residual rank uncertainty (`r_max(i) = r_min(i) + delta`).
//!
//! Identities maintained at all times:
//!
//!   * sum of `g` over all tuples equals the insert count,
//!   * the first tuple holds the minimum (`g = 1`, rank exactly 1) and the last
//!     tuple holds the maximum (`delta = 0`),
//!   * every tuple satisfies `g + delta <= 2*floor(eps*n) + 1`.
//!
//! The last bound is what makes a rank query answerable to within
//! `floor(eps*n)` ranks: scanning for the first tuple whose `r_max` passes
//! `rho + floor(eps*n)` and answering with its predecessor keeps both sides of
//! the rank interval within tolerance. The merge threshold is one tighter than
//! the textbook `floor(2*eps*n) + 1` so the query error stays at or below
//! `eps*n` in exact integer arithmetic, with no half-rank slop.
//!
//! Compression is the simple band-free pass: every `ceil(1/(2*eps))` inserts,
//! adjacent tuples are merged right-to-left wherever the combined tuple still
//! fits the capacity rule. This keeps the tuple list logarithmic in `eps*n`
//! in practice; the harness measures the constant instead of assuming one.

use crate::error::SummaryError;

/// One entry of the summary: a retained value plus rank-bounding counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GkTuple<T> {
    pub value: T,
    pub g: u64,
    pub delta: u64,
}

/// Quantile summary with a deterministic rank guarantee.
///
/// For any insert count `n >= 1` and any rank `rho` in `[1, n]`, `query(rho)`
/// returns a stored stream item whose rank in the inserted multiset differs
/// from `rho` by at most `eps * n`. The guarantee holds for every prefix of
/// the stream, not just at the end.
#[derive(Debug, Clone)]
pub struct GkSummary<T> {
    epsilon: f64,
    tuples: Vec<GkTuple<T>>,
    count: u64,
    compress_period: u64,
    compressed_len: usize,
}

impl<T: Ord + Copy> GkSummary<T> {
    /// Creates an empty summary with error parameter `epsilon` in (0, 1/2].
    pub fn new(epsilon: f64) -> Result<Self, SummaryError> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(SummaryError::InvalidEpsilon(epsilon));
        }
        let compress_period = (1.0 / (2.0 * epsilon)).ceil().max(1.0) as u64;
        Ok(GkSummary {
            epsilon,
            tuples: Vec::new(),
            count: 0,
            compress_period,
            compressed_len: 0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of items inserted so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Number of tuples currently retained.
    pub fn tuple_count(&self) -> usize {
        self.tuples.len()
    }

    /// Read-only view of the tuple list, ordered by value.
    pub fn tuples(&self) -> &[GkTuple<T>] {
        &self.tuples
    }

    /// Largest `g + delta` any tuple may carry at the current count.
    fn capacity(&self) -> u64 {
        2 * (self.epsilon * self.count as f64).floor() as u64 + 1
    }

    /// Query-time rank tolerance, `floor(eps * count)`.
    fn tolerance(&self) -> u64 {
        (self.epsilon * self.count as f64).floor() as u64
    }

    /// Inserts one item. Ties are placed after existing equal values, so the
    /// minimum tuple keeps rank 1 and the maximum tuple keeps `delta = 0`.
    pub fn insert(&mut self, x: T) {
        let pos = self.tuples.partition_point(|t| t.value <= x);
        let delta = if pos == 0 || pos == self.tuples.len() {
            0
        } else {
            // Interior insert: the new instance ranks anywhere in the gap it
            // landed in, which the current capacity bounds.
            self.capacity() - 1
        };
        self.tuples.insert(
            pos,
            GkTuple {
                value: x,
                g: 1,
                delta,
            },
        );
        self.count += 1;
        // Periodic pass, plus a growth bound that keeps the live list within
        // a constant factor of its compressed size between passes (the
        // periodic interval alone can be a large fraction of the steady size
        // when eps is moderate).
        let growth_cap = self.compressed_len + (self.compressed_len / 32).max(2);
        if self.count.is_multiple_of(self.compress_period) || self.tuples.len() >= growth_cap {
            self.compress();
        }
        // TODO: buffer inserts and merge them in batches; per-insert Vec shifts
        // dominate the profile once eps <= 0.01.
    }

    /// Merges adjacent tuples wherever the combined tuple still satisfies the
    /// capacity rule. Idempotent; never drops the minimum or maximum tuple.
    pub fn compress(&mut self) {
        let len = self.tuples.len();
        self.compressed_len = len;
        if len <= 2 {
            return;
        }
        let cap = self.capacity();
        let mut out: Vec<GkTuple<T>> = Vec::with_capacity(len);
        out.push(self.tuples[len - 1]);
        for i in (1..len - 1).rev() {
            let cur = out.last_mut().expect("non-empty");
            if self.tuples[i].g + cur.g + cur.delta <= cap {
                cur.g += self.tuples[i].g;
            } else {
                out.push(self.tuples[i]);
            }
        }
        out.push(self.tuples[0]);
        out.reverse();
        self.tuples = out;
        self.compressed_len = self.tuples.len();
    }

    /// Returns a stored item whose rank is within `eps * count` of `rho`.
    /// `rho` is clamped to `[1, count]`; an empty summary is an error.
    pub fn query(&self, rho: u64) -> Result<T, SummaryError> {
        if self.count == 0 {
            return Err(SummaryError::Empty);
        }
        let target = rho.clamp(1, self.count);
        let bound = target + self.tolerance();
        let mut r_min = 0u64;
        let mut prev = self.tuples[0].value;
        for tup in &self.tuples {
            r_min += tup.g;
            if r_min + tup.delta > bound {
                return Ok(prev);
            }
            prev = tup.value;
        }
        Ok(prev)
    }
}
