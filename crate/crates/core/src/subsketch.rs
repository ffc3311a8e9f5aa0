//! Per-scale sub-sketch `H_i`: a hierarchy with horizon `R_i = 2^i / eps`
//! whose total weight is capped at `3 R_i`.
//!
//! When the cap is exceeded the largest keys are drained, with their
//! weights, until at most `2 R_i` remains. The drained batch belongs to the
//! next scale.

use alloc::vec::Vec;

use crate::hierarchy::Hierarchy;
use crate::params::Params;
use crate::Result;

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubSketch<K> {
    scale: u32,
    r_log2: u32,
    h: Hierarchy<K>,
    /// Set once the total weight has exceeded `R_i`.
    filled: bool,
    /// Smallest stored key at each reset, when instrumented.
    reset_log: Option<Vec<Option<K>>>,
}

impl<K: Ord + Clone> SubSketch<K> {
    pub fn new(params: Params, scale: u32, space: usize, seed: u64, instrumented: bool) -> Result<Self> {
        let layout = params.scale_layout(scale);
        let space = if layout.levels > 0 { space.max(layout.k) } else { space };
        Self::with_hierarchy(params, scale, Hierarchy::new(layout, space, false, seed, instrumented)?, instrumented)
    }

    /// Sub-sketch of never-resized compactors with block size `k` and
    /// space `s`.
    pub fn fixed(params: Params, scale: u32, k: usize, s: usize, seed: u64, instrumented: bool) -> Result<Self> {
        let layout = params.scale_layout(scale);
        let h = Hierarchy::fixed(layout, k, s, false, seed, instrumented)?;
        Self::with_hierarchy(params, scale, h, instrumented)
    }

    fn with_hierarchy(params: Params, scale: u32, h: Hierarchy<K>, instrumented: bool) -> Result<Self> {
        Ok(Self {
            scale,
            r_log2: params.eps_log2 + scale,
            h,
            filled: false,
            reset_log: instrumented.then(Vec::new),
        })
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// `R_i`.
    pub fn horizon(&self) -> u128 {
        1u128 << self.r_log2
    }

    pub fn hierarchy(&self) -> &Hierarchy<K> {
        &self.h
    }

    pub fn hierarchy_mut(&mut self) -> &mut Hierarchy<K> {
        &mut self.h
    }

    pub fn total_weight(&self) -> u128 {
        self.h.total_weight()
    }

    pub fn min_key(&self) -> Option<&K> {
        self.h.min_key()
    }

    pub fn max_key(&self) -> Option<&K> {
        self.h.max_key()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Whether the weight has ever exceeded `R_i`.
    pub fn filled(&self) -> bool {
        self.filled
    }

    pub fn rank_sub(&self, x: &K) -> u64 {
        self.h.rank_estimate(x)
    }

    /// Records that a step has finished; updates the fill flag.
    pub fn observe(&mut self) {
        if self.total_weight() > self.horizon() {
            self.filled = true;
        }
    }

    pub fn overflowing(&self) -> bool {
        self.total_weight() > 3 * self.horizon()
    }

    /// Removes the largest keys until the weight is at most `2 R_i`. The
    /// batch comes back in non-decreasing key order, tagged with weight
    /// exponents.
    pub fn drain(&mut self) -> Vec<(K, u32)> {
        let target = 2 * self.horizon();
        let mut out = Vec::new();
        while self.total_weight() > target {
            match self.h.remove_max() {
                Some(kw) => out.push(kw),
                None => break,
            }
        }
        out.reverse();
        out
    }

    /// Resets the progress measure of every level.
    pub fn reset(&mut self) {
        let min = self.h.min_key().cloned();
        if let Some(log) = self.reset_log.as_mut() {
            log.push(min);
        }
        self.h.reset();
    }

    pub fn receive_batch(&mut self, batch: Vec<(K, u32)>) -> Result<()> {
        self.h.receive(batch)
    }

    /// Resets that happened while some stored key was smaller than `x`.
    pub fn important_resets(&self, x: &K) -> Option<usize> {
        self.reset_log
            .as_ref()
            .map(|log| log.iter().filter(|m| m.as_ref().is_some_and(|m| m < x)).count())
    }
}
