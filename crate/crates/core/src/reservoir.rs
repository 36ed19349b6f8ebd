//! Size-k uniform reservoir sample, used as a space-matched comparison
//! baseline in the harness. Queries sort a copy of the reservoir and pick the
//! proportional index; no per-query error guarantee beyond what k samples buy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SummaryError;

#[derive(Debug, Clone)]
pub struct ReservoirSummary<T> {
    k: usize,
    items: Vec<T>,
    rng: ChaCha8Rng,
    t: u64,
}

impl<T: Ord + Copy> ReservoirSummary<T> {
    pub fn new(k: usize, seed: u64) -> Result<Self, SummaryError> {
        if k == 0 {
            return Err(SummaryError::InvalidPlan { m: 0, n: 0 });
        }
        Ok(ReservoirSummary {
            k,
            items: Vec::with_capacity(k),
            rng: ChaCha8Rng::seed_from_u64(seed),
            t: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn insert(&mut self, x: T) {
        self.t += 1;
        if self.items.len() < self.k {
            self.items.push(x);
        } else {
            let j = self.rng.gen_range(0..self.t);
            if (j as usize) < self.k {
                self.items[j as usize] = x;
            }
        }
    }

    pub fn query(&self, rho: u64) -> Result<T, SummaryError> {
        if self.items.is_empty() {
            return Err(SummaryError::Empty);
        }
        let mut sorted = self.items.clone();
        sorted.sort_unstable();
        let k = sorted.len() as u64;
        let target = rho.clamp(1, self.t.max(1)) as u128;
        let idx =
            ((2 * target * k as u128 + self.t.max(1) as u128) / (2 * self.t.max(1) as u128)) as u64;
        Ok(sorted[(idx.clamp(1, k) - 1) as usize])
    }
}
