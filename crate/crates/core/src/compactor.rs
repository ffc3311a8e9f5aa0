//! Elastic compactor: a sorted block array whose block count can change.
//!
//! Compactions follow the binary progress measure `z`. Shrinking to `l`
//! blocks raises `z` to the next multiple of `2^-l`, and the position `r` of
//! its lowest set bit selects the suffix `r+1..` to compact. A compaction
//! keeps either the odd- or the even-indexed keys of the suffix, chosen by a
//! fair coin, and emits them with doubled weight.

use alloc::vec::Vec;
use rand::RngCore;

use crate::frac::BinaryFraction;
use crate::{pow2_neg, rng_from_seed, Error, Result, Rng};

/// One logged compaction.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompactionRecord<K> {
    /// Blocks from `start_block` to the last allocated block.
    pub blocks: usize,
    pub start_block: usize,
    /// Smallest compacted key; `None` when the suffix was empty.
    pub min_key: Option<K>,
    /// `true` when the odd-indexed keys (1-based) were emitted.
    pub odd: bool,
}

/// Optional bookkeeping used to check the error accounting.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Instrumentation<K> {
    pub compactions: Vec<CompactionRecord<K>>,
    /// Smallest stored key at each reset, `None` if the compactor was empty.
    pub resets: Vec<Option<K>>,
    /// Exact sum of `2^-ceil(s/k)` over resizes since the last reset.
    pub shadow: BinaryFraction,
    /// Largest stored count seen.
    pub max_stored: usize,
    /// Set when a resize released a block that still held keys.
    pub unsafe_release: bool,
}

impl<K> Default for Instrumentation<K> {
    fn default() -> Self {
        Self {
            compactions: Vec::new(),
            resets: Vec::new(),
            shadow: BinaryFraction::zero(),
            max_stored: 0,
            unsafe_release: false,
        }
    }
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ElasticCompactor<K> {
    k: usize,
    blocks: usize,
    items: Vec<K>,
    z: BinaryFraction,
    /// Sum of `2^-ceil(s/k)` over resizes since the last reset.
    accumulator: f64,
    compacted: u64,
    emitted: u64,
    rng: Rng,
    instr: Option<Instrumentation<K>>,
}

impl<K: Ord + Clone> ElasticCompactor<K> {
    pub fn new(k: usize, initial_space: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("block size k must be positive"));
        }
        Ok(Self {
            k,
            blocks: initial_space.div_ceil(k),
            items: Vec::new(),
            z: BinaryFraction::zero(),
            accumulator: 0.0,
            compacted: 0,
            emitted: 0,
            rng: rng_from_seed(seed),
            instr: None,
        })
    }

    /// Enables the compaction log and the shadow accumulator.
    pub fn instrumented(mut self) -> Self {
        self.instr = Some(Instrumentation::default());
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    pub fn capacity(&self) -> usize {
        self.blocks * self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[K] {
        &self.items
    }

    pub fn min(&self) -> Option<&K> {
        self.items.first()
    }

    pub fn max(&self) -> Option<&K> {
        self.items.last()
    }

    pub fn z(&self) -> &BinaryFraction {
        &self.z
    }

    /// Float view of the resize accumulator since the last reset.
    pub fn accumulator(&self) -> f64 {
        self.accumulator
    }

    /// Keys removed by compactions over the lifetime of the compactor.
    pub fn compacted_count(&self) -> u64 {
        self.compacted
    }

    /// Keys emitted by compactions over the lifetime of the compactor.
    pub fn emitted_count(&self) -> u64 {
        self.emitted
    }

    pub fn instrumentation(&self) -> Option<&Instrumentation<K>> {
        self.instr.as_ref()
    }

    /// Compacts blocks `start_block..=b`.
    pub fn compact(&mut self, start_block: usize) -> Result<Vec<K>> {
        if start_block == 0 || start_block > self.blocks {
            return Err(Error::BlockOutOfRange {
                start: start_block,
                blocks: self.blocks,
            });
        }
        Ok(self.compact_from(start_block))
    }

    fn compact_from(&mut self, start_block: usize) -> Vec<K> {
        let at = ((start_block - 1) * self.k).min(self.items.len());
        let suffix = self.items.split_off(at);
        self.compacted += suffix.len() as u64;
        let odd = self.rng.next_u32() & 1 == 1;
        if let Some(instr) = self.instr.as_mut() {
            instr.compactions.push(CompactionRecord {
                blocks: (self.blocks + 1).saturating_sub(start_block),
                start_block,
                min_key: suffix.first().cloned(),
                odd,
            });
        }
        let skip = usize::from(!odd);
        let out: Vec<K> = suffix.into_iter().skip(skip).step_by(2).collect();
        self.emitted += out.len() as u64;
        out
    }

    /// Sets the block count to `ceil(s/k)`, compacting when it shrinks.
    pub fn resize(&mut self, s: usize) -> Result<Vec<K>> {
        let l = s.div_ceil(self.k);
        if self.items.len() <= l * self.k && l >= self.blocks {
            self.note_resize(l);
            self.blocks = l;
            return Ok(Vec::new());
        }
        let mut z = self.z.clone();
        z.truncate_after(l);
        z.add_pow2(l);
        if z.int_part() > 0 {
            return Err(Error::CapacityExhausted);
        }
        self.note_resize(l);
        let r = z.lowest_set_bit().unwrap_or(0);
        self.z = z;
        let out = self.compact_from(r + 1);
        if self.items.len() > l * self.k {
            if let Some(instr) = self.instr.as_mut() {
                instr.unsafe_release = true;
            }
        }
        self.blocks = l;
        Ok(out)
    }

    fn note_resize(&mut self, l: usize) {
        self.accumulator += pow2_neg(l as u64);
        if let Some(instr) = self.instr.as_mut() {
            instr.shadow.add_pow2(l);
        }
    }

    /// Inserts a batch of at most `capacity()` keys.
    ///
    /// Runs `resize(2s)`, merges, then `resize(s)`; returns what the second
    /// resize emits.
    pub fn insert_batch(&mut self, mut xs: Vec<K>) -> Result<Vec<K>> {
        let s = self.capacity();
        if xs.len() > s {
            return Err(Error::BatchTooLarge {
                len: xs.len(),
                capacity: s,
            });
        }
        self.resize(2 * s)?;
        self.merge(&mut xs);
        self.resize(s)
    }

    /// Insertion for a compactor of fixed size: compacts only on overflow,
    /// advancing `z` by `2^-(b-1)` per compaction.
    pub fn insert_fixed(&mut self, mut xs: Vec<K>) -> Result<Vec<K>> {
        self.merge(&mut xs);
        if self.items.len() <= self.capacity() {
            return Ok(Vec::new());
        }
        if self.blocks < 2 {
            return Err(Error::InvalidParameter("fixed compactor needs at least 2 blocks"));
        }
        let l = self.blocks - 1;
        let mut z = self.z.clone();
        z.truncate_after(l);
        z.add_pow2(l);
        if z.int_part() > 0 {
            return Err(Error::CapacityExhausted);
        }
        self.note_resize(l);
        let r = z.lowest_set_bit().unwrap_or(0);
        self.z = z;
        Ok(self.compact_from(r + 1))
    }

    fn merge(&mut self, xs: &mut Vec<K>) {
        if xs.is_empty() {
            return;
        }
        xs.sort();
        if self.items.last().is_none_or(|last| *last <= xs[0]) {
            self.items.append(xs);
        } else {
            let old = core::mem::take(&mut self.items);
            let mut merged = Vec::with_capacity(old.len() + xs.len());
            let mut a = old.into_iter().peekable();
            let mut b = xs.drain(..).peekable();
            loop {
                let take_a = match (a.peek(), b.peek()) {
                    (Some(x), Some(y)) => x <= y,
                    (Some(_), None) => true,
                    (None, Some(_)) => false,
                    (None, None) => break,
                };
                merged.push(if take_a { a.next() } else { b.next() }.unwrap());
            }
            self.items = merged;
        }
        if let Some(instr) = self.instr.as_mut() {
            instr.max_stored = instr.max_stored.max(self.items.len());
        }
    }

    /// Sets `z` to zero; stored keys are kept.
    pub fn reset(&mut self) {
        self.z = BinaryFraction::zero();
        self.accumulator = 0.0;
        if let Some(instr) = self.instr.as_mut() {
            instr.shadow = BinaryFraction::zero();
            instr.resets.push(self.items.first().cloned());
        }
    }

    pub fn remove_max(&mut self) -> Result<K> {
        self.items.pop().ok_or(Error::Empty)
    }

    /// Number of stored keys strictly smaller than `x`.
    pub fn rank_in_memory(&self, x: &K) -> usize {
        self.items.partition_point(|y| y < x)
    }

    /// Logged compactions whose smallest compacted key is `<= x`.
    pub fn important_compaction_count(&self, x: &K) -> Result<usize> {
        let instr = self.instr.as_ref().ok_or(Error::InstrumentationDisabled)?;
        Ok(count_important(&instr.compactions, x))
    }

    /// Logged resets that happened while some key `<= x` was stored.
    pub fn important_reset_count(&self, x: &K) -> Result<usize> {
        let instr = self.instr.as_ref().ok_or(Error::InstrumentationDisabled)?;
        Ok(instr
            .resets
            .iter()
            .filter(|m| m.as_ref().is_some_and(|m| m <= x))
            .count())
    }

    /// Replaces the stored keys, for tests that need a specific layout.
    pub fn load(&mut self, mut items: Vec<K>, z: BinaryFraction) -> Result<()> {
        items.sort();
        if items.len() > self.capacity() {
            return Err(Error::BatchTooLarge {
                len: items.len(),
                capacity: self.capacity(),
            });
        }
        self.items = items;
        self.z = z;
        Ok(())
    }
}

/// Compactions in `log` whose smallest compacted key is `<= x`.
pub fn count_important<K: Ord>(log: &[CompactionRecord<K>], x: &K) -> usize {
    log.iter()
        .filter(|c| c.min_key.as_ref().is_some_and(|m| m <= x))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn with_coin(odd: bool) -> ElasticCompactor<u32> {
        // Pick the first seed whose first coin matches.
        (0..)
            .map(|seed| ElasticCompactor::new(2, 4, seed).unwrap())
            .find(|c| c.clone().rng.next_u32() & 1 == u32::from(odd))
            .unwrap()
    }

    #[test]
    fn construction() {
        let c = ElasticCompactor::<u32>::new(2, 0, 0).unwrap();
        assert_eq!(c.block_count(), 0);
        assert!(c.z().is_zero());
        let c = ElasticCompactor::<u32>::new(2, 5, 0).unwrap();
        assert_eq!((c.block_count(), c.capacity()), (3, 6));
        assert!(ElasticCompactor::<u32>::new(0, 4, 0).is_err());
    }

    #[test]
    fn compact_odd_and_even() {
        let mut c = with_coin(true);
        c.load(vec![1, 3, 5, 7], BinaryFraction::zero()).unwrap();
        assert_eq!(c.compact(2).unwrap(), vec![5]);
        assert_eq!(c.items(), &[1, 3]);
        let mut c = with_coin(false);
        c.load(vec![1, 3, 5, 7], BinaryFraction::zero()).unwrap();
        assert_eq!(c.compact(2).unwrap(), vec![7]);
        assert!(c.compact(3).is_err());
    }

    #[test]
    fn shrink_follows_lowest_bit() {
        let mut c = ElasticCompactor::new(2, 8, 1).unwrap().instrumented();
        c.load(vec![1, 2, 3, 4, 5, 6, 7], BinaryFraction::from_bits("0110"))
            .unwrap();
        c.resize(4).unwrap();
        assert_eq!(*c.z(), BinaryFraction::from_bits("10"));
        let rec = &c.instrumentation().unwrap().compactions[0];
        assert_eq!((rec.start_block, rec.blocks), (2, 3));
        assert_eq!(c.block_count(), 2);
        assert_eq!(c.items(), &[1, 2]);
    }

    #[test]
    fn pure_expansion() {
        let mut c = ElasticCompactor::<u32>::new(2, 4, 0).unwrap();
        assert!(c.resize(8).unwrap().is_empty());
        assert_eq!(c.block_count(), 4);
        assert!(c.z().is_zero());
    }

    #[test]
    fn insert_and_shrink_schedule() {
        // Every single-key insert at constant block count advances z by
        // 2^-b. Counting the overflow region as one block, the compacted
        // suffix sizes run 1,2,1,3,1,2,1,4.
        let b = 6;
        let mut c = ElasticCompactor::new(2, 2 * b, 3).unwrap().instrumented();
        for x in 0..8u32 {
            c.insert_batch(vec![x]).unwrap();
        }
        let log = &c.instrumentation().unwrap().compactions;
        let sizes: Vec<usize> = log.iter().map(|r| b + 2 - r.start_block).collect();
        assert_eq!(sizes, vec![1, 2, 1, 3, 1, 2, 1, 4]);
    }

    #[test]
    fn insert_batch_rules() {
        let mut c = ElasticCompactor::new(2, 4, 0).unwrap();
        assert!(c.insert_batch(vec![3, 1]).unwrap().is_empty());
        assert_eq!(c.items(), &[1, 3]);
        assert!(c.insert_batch(vec![0; 5]).is_err());

        let mut c = ElasticCompactor::new(2, 4, 0).unwrap();
        c.load(vec![1, 2, 3, 4], BinaryFraction::zero()).unwrap();
        // The one-key overflow suffix is emitted or dropped on a coin.
        let out = c.insert_batch(vec![5]).unwrap();
        assert!(out.len() <= 1);
        assert_eq!(c.items(), &[1, 2, 3, 4]);
    }

    #[test]
    fn reset_remove_rank() {
        let mut c = ElasticCompactor::new(2, 6, 0).unwrap().instrumented();
        c.reset();
        assert_eq!(c.important_reset_count(&u32::MAX).unwrap(), 0);
        c.load(vec![1, 3, 5], BinaryFraction::from_bits("1")).unwrap();
        c.reset();
        c.reset();
        assert!(c.z().is_zero());
        assert_eq!(c.items(), &[1, 3, 5]);
        assert_eq!(c.rank_in_memory(&4), 2);
        assert_eq!(c.remove_max().unwrap(), 5);
        assert_eq!(c.items(), &[1, 3]);
        let mut e = ElasticCompactor::<u32>::new(2, 2, 0).unwrap();
        assert_eq!(e.rank_in_memory(&9), 0);
        assert_eq!(e.remove_max(), Err(Error::Empty));
        e.load(vec![2, 2, 2].into_iter().take(2).collect(), BinaryFraction::zero())
            .unwrap();
        assert_eq!(e.rank_in_memory(&2), 0);
    }

    #[test]
    fn important_count_from_log() {
        let log: Vec<CompactionRecord<u32>> = [5, 9, 2]
            .iter()
            .map(|&m| CompactionRecord {
                blocks: 1,
                start_block: 1,
                min_key: Some(m),
                odd: true,
            })
            .collect();
        assert_eq!(count_important(&log, &4), 1);
        assert_eq!(count_important::<u32>(&[], &4), 0);
        let c = ElasticCompactor::<u32>::new(2, 2, 0).unwrap();
        assert_eq!(
            c.important_compaction_count(&1),
            Err(Error::InstrumentationDisabled)
        );
    }

    #[test]
    fn exhaustion_is_reported() {
        let mut c = ElasticCompactor::<u32>::new(2, 2, 0).unwrap();
        c.resize(2).unwrap();
        c.resize(0).unwrap_err();
        let mut c = ElasticCompactor::<u32>::new(2, 4, 0).unwrap();
        // Shrinking to one block twice: z goes 0.1 then would hit 1.
        c.resize(2).unwrap();
        c.resize(4).unwrap();
        assert_eq!(c.resize(2), Err(Error::CapacityExhausted));
    }
}
