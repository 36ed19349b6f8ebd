//! Known-length streaming summary: Bernoulli sampling in front of a GK summary.
//!
//! The stream length `n` is declared up front. Each arriving item is kept with
//! probability `m/n` and fed straight into a GK summary configured at an
//! eighth of the target error; sampled items are never buffered, so live
//! memory is the GK summary alone and depends on `m`, not `n`. A rank query
//! `rho` is translated to the sample domain as `round(rho * m / n)`, truncated
//! into the range the sample actually covers, and answered by the GK summary.
//!
//! Answers come with a `guaranteed` flag: the composition's error target of
//! `eps * t / 2` is a high-probability statement that only applies once at
//! least `n/64` items have arrived. Earlier queries are still answered, the
//! flag just tells the caller no bound is claimed yet.

use crate::error::SummaryError;
use crate::gk::GkSummary;
use crate::sampler::BernoulliSampler;

/// A query answer plus whether the error target applies at the current time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankAnswer<T> {
    pub value: T,
    /// True once t >= n/64; before that the answer is best-effort.
    pub guaranteed: bool,
}

/// Sampled summary for a stream whose total length is known in advance.
#[derive(Debug, Clone)]
pub struct FixedNSummary<T> {
    epsilon: f64,
    n: u64,
    m: u64,
    gk: GkSummary<T>,
    sampler: BernoulliSampler,
    t: u64,
}

impl<T: Ord + Copy> FixedNSummary<T> {
    /// `epsilon` in (0, 1/2], `1 <= m <= n`. The sampler runs at rate `m/n`
    /// and the inner GK summary at `epsilon/8`.
    pub fn new(epsilon: f64, n: u64, m: u64, seed: u64) -> Result<Self, SummaryError> {
        if !(epsilon > 0.0 && epsilon <= 0.5) {
            return Err(SummaryError::InvalidEpsilon(epsilon));
        }
        if m == 0 || m > n {
            return Err(SummaryError::InvalidPlan { m, n });
        }
        Ok(FixedNSummary {
            epsilon,
            n,
            m,
            gk: GkSummary::new(epsilon / 8.0)?,
            sampler: BernoulliSampler::new(m, n as u128, seed)?,
            t: 0,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Items seen so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Items accepted into the GK summary so far.
    pub fn sample_count(&self) -> u64 {
        self.gk.count()
    }

    pub fn tuple_count(&self) -> usize {
        self.gk.tuple_count()
    }

    /// The inner GK summary, mostly for space accounting.
    pub fn gk(&self) -> &GkSummary<T> {
        &self.gk
    }

    /// Feeds the next stream item. Inserting more than `n` items is an error.
    pub fn insert(&mut self, x: T) -> Result<(), SummaryError> {
        if self.t == self.n {
            return Err(SummaryError::StreamOverflow { n: self.n });
        }
        self.t += 1;
        if self.sampler.offer() {
            self.gk.insert(x);
        }
        Ok(())
    }

    /// Answers a rank query against the current prefix. Errors if no sample
    /// has been accepted yet (in particular before the first insert).
    pub fn query(&self, rho: u64) -> Result<RankAnswer<T>, SummaryError> {
        let samples = self.gk.count();
        if samples == 0 {
            return Err(SummaryError::Empty);
        }
        let target = rho.clamp(1, self.t.max(1));
        // round-half-up of target * m / n, then truncate to the sample range.
        let scaled =
            ((2 * target as u128 * self.m as u128 + self.n as u128) / (2 * self.n as u128)) as u64;
        let sample_rho = scaled.clamp(1, samples);
        let value = self.gk.query(sample_rho)?;
        Ok(RankAnswer {
            value,
            guaranteed: self.t as u128 * 64 >= self.n as u128,
        })
    }
}

/// Desk-scale default for the sample-size parameter: `ceil(50 * ln(1/eps) / eps^2)`.
///
/// The setting that makes the concentration bounds provably dominate is about
/// four orders of magnitude larger (see [`conservative_m`]) and is pointless
/// for streams that fit on one machine; this default is what the bundled
/// error harness is calibrated against.
pub fn default_m(epsilon: f64) -> u64 {
    (50.0 * (1.0 / epsilon).ln() / (epsilon * epsilon)).ceil() as u64
}

/// Sample size at which the union bound over every sample succeeds with
/// probability 2/3: `ceil(300000 * ln(1/eps) / eps^2)`. At eps = 0.1 this is
/// about 6.9e7, far past desk scale; documented, never enforced.
pub fn conservative_m(epsilon: f64) -> u64 {
    (300_000.0 * (1.0 / epsilon).ln() / (epsilon * epsilon)).ceil() as u64
}
