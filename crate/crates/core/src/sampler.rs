//! Seeded Bernoulli downsampling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SummaryError;

/// Accepts each offered item independently with a fixed rational probability.
///
/// The rate is stored exactly as `num/den` and each draw compares a uniform
/// 64-bit word against `floor(num * 2^64 / den)` computed in integer
/// arithmetic, so rates as small as `1/2^r/32` carry no floating-point bias.
/// The accept/reject sequence is a pure function of `(seed, num, den)`.
#[derive(Debug, Clone)]
pub struct BernoulliSampler {
    num: u64,
    den: u128,
    threshold: u128,
    rng: ChaCha8Rng,
    offered: u64,
    accepted: u64,
}

impl BernoulliSampler {
    /// Rate `num/den` in (0, 1]. `den` is wide enough for `32 << r` at any
    /// row index that a 2^62-item stream can reach.
    pub fn new(num: u64, den: u128, seed: u64) -> Result<Self, SummaryError> {
        if num == 0 || den == 0 || num as u128 > den {
            return Err(SummaryError::InvalidRate { num, den });
        }
        let threshold = ((num as u128) << 64) / den;
        Ok(BernoulliSampler {
            num,
            den,
            threshold,
            rng: ChaCha8Rng::seed_from_u64(seed),
            offered: 0,
            accepted: 0,
        })
    }

    /// Rate exactly 1; every offer is accepted (still consumes one draw, so
    /// alignment with a rate-p sampler under the same seed is preserved).
    pub fn pass_through(seed: u64) -> Self {
        Self::new(1, 1, seed).expect("1/1 is a valid rate")
    }

    /// Offers the next item; returns whether it was accepted.
    pub fn offer(&mut self) -> bool {
        let draw = self.rng.next_u64() as u128;
        self.offered += 1;
        let accept = draw < self.threshold;
        if accept {
            self.accepted += 1;
        }
        accept
    }

    pub fn rate(&self) -> (u64, u128) {
        (self.num, self.den)
    }

    pub fn offered(&self) -> u64 {
        self.offered
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }
}
