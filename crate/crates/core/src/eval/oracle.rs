//! Exact strict ranks.

use alloc::vec::Vec;

#[derive(Clone, Debug, Default)]
pub struct RankOracle<K> {
    sorted: Vec<K>,
}

impl<K: Ord + Clone> RankOracle<K> {
    pub fn new(stream: &[K]) -> Self {
        let mut sorted = stream.to_vec();
        sorted.sort();
        Self { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Number of stream keys strictly below `x`.
    pub fn exact_rank(&self, x: &K) -> u64 {
        self.sorted.partition_point(|y| y < x) as u64
    }

    /// The `r`-th smallest key (0-based). With duplicates its rank may be
    /// smaller than `r`.
    pub fn key_at(&self, r: u64) -> Option<&K> {
        self.sorted.get(usize::try_from(r).ok()?)
    }

    pub fn sorted(&self) -> &[K] {
        &self.sorted
    }
}

/// Linear-scan count, independent of [`RankOracle`].
pub fn count_below<K: Ord>(stream: &[K], x: &K) -> u64 {
    stream.iter().fold(0, |acc, y| acc + u64::from(y < x))
}
