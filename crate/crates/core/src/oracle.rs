//! Exact rank oracle for evaluation. Keeps every item, answers by sorting;
//! intentionally memory-unbounded and test-only.

use crate::error::SummaryError;

/// Ground-truth order statistics over everything inserted so far.
///
/// Rank convention: `rank(y) = |{z : z <= y}|`. With duplicates a value
/// occupies the whole interval `[|{z < y}| + 1, |{z <= y}|]` of ranks;
/// [`rank_error`](Self::rank_error) measures distance to that interval, which
/// for distinct values is exactly `|rank(y) - rho|`.
#[derive(Debug, Clone, Default)]
pub struct ExactOracle<T> {
    items: Vec<T>,
    sorted_len: usize,
}

impl<T: Ord + Clone> ExactOracle<T> {
    pub fn new() -> Self {
        ExactOracle {
            items: Vec::new(),
            sorted_len: 0,
        }
    }

    pub fn insert(&mut self, x: T) {
        self.items.push(x);
    }

    pub fn len(&self) -> u64 {
        self.items.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn ensure_sorted(&mut self) {
        if self.sorted_len < self.items.len() {
            // Stable adaptive sort: cheap when only a suffix is new.
            self.items.sort();
            self.sorted_len = self.items.len();
        }
    }

    /// `|{z : z <= y}|`.
    pub fn rank(&mut self, y: &T) -> u64 {
        self.ensure_sorted();
        self.items.partition_point(|z| z <= y) as u64
    }

    /// `(|{z : z < y}|, |{z : z <= y}|)`.
    pub fn rank_bounds(&mut self, y: &T) -> (u64, u64) {
        self.ensure_sorted();
        let lt = self.items.partition_point(|z| z < y) as u64;
        let le = self.items.partition_point(|z| z <= y) as u64;
        (lt, le)
    }

    /// Distance from `rho` to the rank interval occupied by `y`; 0 when some
    /// copy of `y` has rank exactly `rho`.
    pub fn rank_error(&mut self, y: &T, rho: u64) -> u64 {
        let (lt, le) = self.rank_bounds(y);
        if rho < lt + 1 {
            lt + 1 - rho
        } else if rho > le.max(lt) {
            rho - le.max(lt)
        } else {
            0
        }
    }

    /// The item of rank `rho`, for `1 <= rho <= len`.
    pub fn select(&mut self, rho: u64) -> Result<T, SummaryError> {
        if self.items.is_empty() {
            return Err(SummaryError::Empty);
        }
        if rho == 0 || rho > self.items.len() as u64 {
            return Err(SummaryError::RankOutOfRange {
                rho,
                count: self.items.len() as u64,
            });
        }
        self.ensure_sorted();
        Ok(self.items[(rho - 1) as usize].clone())
    }
}
