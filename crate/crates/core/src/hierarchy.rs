//! Top-R quantiles sketch: a sampler, a chain of elastic compactors and a
//! buffer.
//!
//! Compactor `j` holds keys of weight `2^(base_exp + j)`; the buffer sits
//! one exponent above the last compactor. Keys reach compactor 0 through a
//! sampler that keeps each key with probability `2^-base_exp`.
//!
//! Work is organised in steps. A step hands every compactor exactly one
//! batch (possibly empty), in ascending order, and cascades each output into
//! the next level. Keys waiting for a later step stay in a pending queue.

use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;

use crate::compactor::ElasticCompactor;
use crate::params::{Layout, Params};
use crate::{pow2_neg, rng_from_seed, Error, Result, Rng};

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hierarchy<K> {
    layout: Layout,
    /// Buffer drops its largest keys beyond capacity (standalone top-R).
    discard: bool,
    /// Compactors never resize and compact only on overflow.
    fixed: bool,
    compactors: Vec<ElasticCompactor<K>>,
    buffer: Vec<K>,
    space: usize,
    pending: Vec<Vec<K>>,
    rng: Rng,
    accepted: u128,
    discarded: u128,
    removed: u128,
    accumulator: f64,
    steps: u64,
}

/// Block size and space of the fixed-size variant for streams of length
/// `n`: `k = floor(1/(eps sqrt(log n)))`, at least 2 and even, and
/// `s = ceil(sqrt(log n)/eps)` rounded up to a multiple of `k`.
pub fn fixed_size(eps_log2: u32, n: u64) -> Result<(usize, usize)> {
    let root = libm::sqrt(libm::log2(n.max(2) as f64));
    let inv_eps = (1u64 << eps_log2) as f64;
    let raw = libm::floor(inv_eps / root);
    if raw < 1.0 {
        return Err(Error::InvalidParameter("eps too large for the fixed-size variant"));
    }
    let mut k = (raw as usize).max(2);
    k += k % 2;
    let s = (libm::ceil(root * inv_eps) as usize).div_ceil(k) * k;
    Ok((k, s))
}

impl<K: Ord + Clone> Hierarchy<K> {
    pub fn new(layout: Layout, space: usize, discard: bool, seed: u64, instrumented: bool) -> Result<Self> {
        if layout.levels > 0 && space < layout.k {
            return Err(Error::InvalidParameter("space must be at least one block"));
        }
        let mut rng = rng_from_seed(seed);
        let compactors = (0..layout.levels)
            .map(|_| {
                let c = ElasticCompactor::new(layout.k, space, rng.next_u64())?;
                Ok(if instrumented { c.instrumented() } else { c })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layout,
            discard,
            fixed: false,
            compactors,
            buffer: Vec::new(),
            space,
            pending: vec![Vec::new(); layout.levels + 1],
            rng,
            accepted: 0,
            discarded: 0,
            removed: 0,
            accumulator: 0.0,
            steps: 0,
        })
    }

    /// Standalone top-R sketch with `R = 2^r_log2`.
    pub fn top_r(params: Params, r_log2: u32, space: usize, seed: u64) -> Result<Self> {
        if r_log2 < params.eps_log2 {
            return Err(Error::InvalidParameter("R must be at least 1/eps"));
        }
        Self::new(params.layout(r_log2, true), space, true, seed, false)
    }

    /// Fixed-size variant: block size `floor(1/(eps sqrt(log n)))` and space
    /// `ceil(sqrt(log n)/eps)`, never resized.
    pub fn fixed_topq(eps_log2: u32, n: u64, r_log2: u32, seed: u64) -> Result<Self> {
        let (k, s) = fixed_size(eps_log2, n)?;
        Self::fixed(Params::constant(eps_log2).layout(r_log2, true), k, s, true, seed, false)
    }

    /// A hierarchy of fixed compactors with block size `k` and space `s`.
    pub fn fixed(mut layout: Layout, k: usize, s: usize, discard: bool, seed: u64, instrumented: bool) -> Result<Self> {
        layout.k = k;
        let mut h = Self::new(layout, s, discard, seed, instrumented)?;
        h.fixed = true;
        Ok(h)
    }

    pub fn is_fixed(&self) -> bool {
        self.fixed
    }

    pub fn instrumented(mut self) -> Self {
        self.compactors = self.compactors.into_iter().map(|c| c.instrumented()).collect();
        self
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn space(&self) -> usize {
        self.space
    }

    pub fn compactors(&self) -> &[ElasticCompactor<K>] {
        &self.compactors
    }

    pub fn buffer(&self) -> &[K] {
        &self.buffer
    }

    /// Stored keys across levels and buffer.
    pub fn len(&self) -> usize {
        self.compactors.iter().map(|c| c.len()).sum::<usize>() + self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Allocated slots: compactor capacities plus the buffer bound.
    pub fn allocated(&self) -> usize {
        self.compactors.iter().map(|c| c.capacity()).sum::<usize>() + self.layout.buffer_cap
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.compactors
            .iter()
            .flat_map(|c| c.items().iter())
            .chain(self.buffer.iter())
    }

    pub fn min_key(&self) -> Option<&K> {
        self.compactors
            .iter()
            .filter_map(|c| c.min())
            .chain(self.buffer.first())
            .min()
    }

    pub fn max_key(&self) -> Option<&K> {
        self.compactors
            .iter()
            .filter_map(|c| c.max())
            .chain(self.buffer.last())
            .max()
    }

    /// Sum of `2^-(s/k)` over steps since the last reset.
    pub fn accumulator(&self) -> f64 {
        self.accumulator
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Weight admitted through `accept` and `receive`.
    pub fn accepted_weight(&self) -> u128 {
        self.accepted
    }

    pub fn has_pending(&self) -> bool {
        self.pending.iter().any(|p| !p.is_empty())
    }

    /// Keeps each key with probability `2^-base_exp`.
    pub fn sample(&mut self, xs: Vec<K>) -> Vec<K> {
        let shift = self.layout.base_exp;
        if shift == 0 {
            return xs;
        }
        xs.into_iter()
            .filter(|_| shift < 64 && self.rng.next_u64() >> (64 - shift) == 0)
            .collect()
    }

    /// Queues already-sampled keys for compactor 0 (or the buffer when there
    /// are no compactors).
    pub fn accept(&mut self, xs: Vec<K>) {
        self.accepted += xs.len() as u128 * u128::from(self.layout.weight(0));
        self.pending[0].extend(xs);
    }

    /// Queues migrated `(key, weight exponent)` pairs at their matching
    /// level. A key of half the lowest weight is kept with probability 1/2.
    pub fn receive(&mut self, batch: Vec<(K, u32)>) -> Result<()> {
        let base = self.layout.base_exp;
        let top = self.layout.buffer_exp();
        for (key, exp) in batch {
            if exp >= base && exp <= top {
                self.accepted += 1u128 << exp;
                self.pending[(exp - base) as usize].push(key);
            } else if exp + 1 == base {
                if self.rng.next_u32() & 1 == 1 {
                    self.accepted += 1u128 << base;
                    self.pending[0].push(key);
                }
            } else {
                return Err(Error::WeightNotRepresentable { exp });
            }
        }
        Ok(())
    }

    /// Samples and inserts one key, running steps until nothing is pending.
    pub fn insert(&mut self, x: K) -> Result<()> {
        let kept = self.sample(vec![x]);
        if kept.is_empty() {
            return Ok(());
        }
        self.accept(kept);
        self.drain_pending()
    }

    pub fn drain_pending(&mut self) -> Result<()> {
        while self.has_pending() {
            self.step()?;
        }
        Ok(())
    }

    /// One step: every compactor receives one batch of at most its capacity.
    pub fn step(&mut self) -> Result<()> {
        for j in 0..self.compactors.len() {
            let c = &mut self.compactors[j];
            let out = if self.fixed {
                c.insert_fixed(core::mem::take(&mut self.pending[j]))?
            } else {
                let take = self.pending[j].len().min(c.capacity());
                let chunk: Vec<K> = self.pending[j].drain(..take).collect();
                c.insert_batch(chunk)?
            };
            self.pending[j + 1].extend(out);
        }
        let top = core::mem::take(&mut self.pending[self.layout.levels]);
        self.push_buffer(top);
        self.note_step(self.space);
        Ok(())
    }

    fn note_step(&mut self, space: usize) {
        self.steps += 1;
        if !self.fixed && self.layout.levels > 0 {
            self.accumulator += pow2_neg((space / self.layout.k) as u64);
        }
    }

    fn push_buffer(&mut self, mut xs: Vec<K>) {
        if xs.is_empty() {
            return;
        }
        self.buffer.append(&mut xs);
        self.buffer.sort();
        if self.discard && self.buffer.len() > self.layout.buffer_cap {
            let extra = self.buffer.len() - self.layout.buffer_cap;
            self.buffer.truncate(self.layout.buffer_cap);
            self.discarded += extra as u128 * (1u128 << self.layout.buffer_exp());
        }
    }

    /// Resizes every compactor to `s`, cascading emissions upward. Counts
    /// as one step.
    pub fn resize(&mut self, s: usize) -> Result<()> {
        if self.fixed {
            return Err(Error::InvalidParameter("fixed-size hierarchy cannot resize"));
        }
        if self.layout.levels > 0 && s < self.layout.k {
            return Err(Error::InvalidParameter("space must be at least one block"));
        }
        debug_assert!(!self.has_pending());
        let mut carry = Vec::new();
        for (j, c) in self.compactors.iter_mut().enumerate() {
            let mut out = Vec::new();
            if j > 0 {
                let mut rest = core::mem::take(&mut carry);
                loop {
                    let take = rest.len().min(c.capacity());
                    let chunk: Vec<K> = rest.drain(..take).collect();
                    out.extend(c.insert_batch(chunk)?);
                    if rest.is_empty() {
                        break;
                    }
                }
            }
            out.extend(c.resize(s)?);
            carry = out;
        }
        self.push_buffer(carry);
        self.space = s;
        self.note_step(s);
        Ok(())
    }

    /// Weighted count of stored keys strictly below `x`.
    pub fn rank_estimate(&self, x: &K) -> u64 {
        let levels: u64 = self
            .compactors
            .iter()
            .enumerate()
            .map(|(j, c)| c.rank_in_memory(x) as u64 * self.layout.weight(j))
            .sum();
        let b = self.buffer.partition_point(|y| y < x) as u64;
        levels + (b << self.layout.buffer_exp())
    }

    pub fn total_weight(&self) -> u128 {
        let levels: u128 = self
            .compactors
            .iter()
            .enumerate()
            .map(|(j, c)| c.len() as u128 * u128::from(self.layout.weight(j)))
            .sum();
        levels + ((self.buffer.len() as u128) << self.layout.buffer_exp())
    }

    /// Removes the largest stored key, returning it with its weight
    /// exponent. Ties go to the highest level.
    pub fn remove_max(&mut self) -> Option<(K, u32)> {
        let mut best: Option<(usize, &K)> = self.buffer.last().map(|k| (self.compactors.len(), k));
        for (j, c) in self.compactors.iter().enumerate().rev() {
            if let Some(m) = c.max() {
                if best.is_none_or(|(_, b)| m > b) {
                    best = Some((j, m));
                }
            }
        }
        let (j, _) = best?;
        let exp = self.layout.base_exp + j as u32;
        let key = if j == self.compactors.len() {
            self.buffer.pop()?
        } else {
            self.compactors[j].remove_max().ok()?
        };
        self.removed += 1u128 << exp;
        Some((key, exp))
    }

    /// Resets every compactor's progress measure.
    pub fn reset(&mut self) {
        for c in &mut self.compactors {
            c.reset();
        }
        self.accumulator = 0.0;
    }

    /// Weight ledger: `(stored + discarded + removed, accepted + parity)`,
    /// where parity is the weight created or lost by odd-sized compactions.
    /// The two sides agree whenever nothing is pending.
    pub fn weight_balance(&self) -> (i128, i128) {
        let parity: i128 = self
            .compactors
            .iter()
            .enumerate()
            .map(|(j, c)| {
                (2 * c.emitted_count() as i128 - c.compacted_count() as i128)
                    * i128::from(self.layout.weight(j))
            })
            .sum();
        let lhs = (self.total_weight() + self.discarded + self.removed) as i128;
        (lhs, self.accepted as i128 + parity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_buffered_key() {
        // eps = 1/4, R = 16: buffer weight eps R = 4.
        let p = Params::constant(2);
        let mut h = Hierarchy::<u32>::new(p.layout(4, true), 8, true, 0, false).unwrap();
        assert_eq!(h.rank_estimate(&9), 0);
        h.push_buffer(vec![5]);
        assert_eq!(h.rank_estimate(&9), 4);
    }

    #[test]
    fn eps_one_keeps_everything() {
        let p = Params::constant(0);
        let mut h = Hierarchy::top_r(p, 0, 2, 1).unwrap();
        assert_eq!(h.layout().base_exp, 0);
        for x in 0..5u32 {
            h.insert(x).unwrap();
        }
        assert_eq!(h.buffer(), &[0]);
    }

    #[test]
    fn boundary_r_goes_to_weight_one() {
        // R = 4 = 1/eps^2 with eps = 1/2: no sampler, level 0 has weight 1.
        let h = Hierarchy::<u32>::top_r(Params::constant(1), 2, 4, 0).unwrap();
        assert_eq!((h.layout().base_exp, h.layout().levels), (0, 1));
    }

    #[test]
    fn fixed_variant_constants() {
        let h = Hierarchy::<u32>::fixed_topq(5, 1 << 16, 10, 0).unwrap();
        assert_eq!((h.layout().k, h.space()), (8, 128));
        assert_eq!(h.rank_estimate(&0), 0);
        assert!(Hierarchy::<u32>::fixed_topq(1, 1 << 16, 10, 0).is_err());
    }

    #[test]
    fn shrinking_full_level_cascades() {
        let layout = Layout {
            k: 2,
            base_exp: 0,
            levels: 2,
            buffer_cap: 8,
        };
        let mut h = Hierarchy::<u32>::new(layout, 4, false, 5, false).unwrap();
        h.compactors[0]
            .load(vec![1, 2, 3, 4], crate::frac::BinaryFraction::zero())
            .unwrap();
        h.resize(2).unwrap();
        assert_eq!(h.compactors()[0].items(), &[1, 2]);
        assert_eq!(h.compactors()[1].len() + h.buffer().len(), 1);
        assert_eq!(h.weight_balance().0, h.weight_balance().1 + 4);
    }
}
