//! The relative-error sketch.
//!
//! Keys are routed to scales by comparing against scale minima, staged in
//! per-scale batches of `1/eps`, and flushed through the scale's sampler.
//! A scale whose weight exceeds `3 R_i` drains its largest keys into the
//! next scale, which is reset first. After every step the allocator's space
//! targets are reconciled with the scales' current sizes.

use alloc::vec::Vec;
use rand::RngCore;

use crate::allocator::{Allocator, AllocatorStats};
use crate::hierarchy::fixed_size;
use crate::params::Params;
use crate::subsketch::SubSketch;
use crate::{rng_from_seed, Error, Result, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SketchConfig {
    pub params: Params,
    pub seed: u64,
    /// Keep compaction and reset logs and the event list.
    pub instrument: bool,
    /// Record one trace row per step.
    pub trace: bool,
    /// Baseline mode: every scale uses never-resized compactors sized for
    /// streams of this length, and the allocator only observes.
    pub fixed_n: Option<u64>,
}

impl SketchConfig {
    pub fn new(params: Params, seed: u64) -> Self {
        Self {
            params,
            seed,
            instrument: false,
            trace: false,
            fixed_n: None,
        }
    }
}

/// One allocator step.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRow {
    pub step: u64,
    pub level: usize,
    pub s_hat: usize,
    pub phi_level: u128,
    pub phi_child: u128,
    pub accumulator: f64,
    /// Keys stored anywhere in the sketch after the step.
    pub stored: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpaceTrace {
    pub rows: Vec<TraceRow>,
}

/// Structural events, recorded when instrumented.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Event {
    Overflow(usize),
    Reset(usize),
    Deliver(usize),
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct Scale<K> {
    sub: SubSketch<K>,
    staging: Vec<K>,
    staging_min: Option<K>,
}

impl<K: Ord + Clone> Scale<K> {
    fn min_key(&self) -> Option<&K> {
        match (self.sub.min_key(), self.staging_min.as_ref()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn max_key(&self) -> Option<&K> {
        self.sub.max_key().into_iter().chain(self.staging.iter()).max()
    }
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelativeSketch<K> {
    config: SketchConfig,
    scales: Vec<Scale<K>>,
    allocator: Allocator,
    rng: Rng,
    n_seen: u64,
    stored: usize,
    peak_stored: usize,
    trace: Option<SpaceTrace>,
    events: Option<Vec<Event>>,
}

impl<K: Ord + Clone> RelativeSketch<K> {
    pub fn new(config: SketchConfig) -> Self {
        Self {
            config,
            scales: Vec::new(),
            allocator: Allocator::new(config.params),
            rng: rng_from_seed(config.seed),
            n_seen: 0,
            stored: 0,
            peak_stored: 0,
            trace: config.trace.then(SpaceTrace::default),
            events: config.instrument.then(Vec::new),
        }
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    pub fn scale_count(&self) -> usize {
        self.scales.len()
    }

    pub fn subsketch(&self, i: usize) -> Option<&SubSketch<K>> {
        self.scales.get(i).map(|s| &s.sub)
    }

    pub fn staged(&self, i: usize) -> &[K] {
        self.scales.get(i).map_or(&[], |s| &s.staging)
    }

    pub fn allocator(&self) -> &Allocator {
        &self.allocator
    }

    pub fn allocator_stats(&self) -> AllocatorStats {
        self.allocator.stats()
    }

    pub fn events(&self) -> Option<&[Event]> {
        self.events.as_deref()
    }

    /// Keys currently stored, including staged keys.
    pub fn stored_len(&self) -> usize {
        self.stored
    }

    pub fn peak_stored(&self) -> usize {
        self.peak_stored
    }

    /// Sum over scales of per-compactor space times compactor count.
    pub fn allocated_space(&self) -> usize {
        self.scales
            .iter()
            .map(|s| s.sub.hierarchy().space() * s.sub.hierarchy().layout().levels)
            .sum()
    }

    pub fn insert(&mut self, x: K) -> Result<()> {
        self.n_seen += 1;
        if self.scales.is_empty() {
            self.materialize()?;
        }
        let i = self.route(&x);
        let scale = &mut self.scales[i];
        if scale.staging_min.as_ref().is_none_or(|m| x < *m) {
            scale.staging_min = Some(x.clone());
        }
        scale.staging.push(x);
        self.stored += 1;
        self.peak_stored = self.peak_stored.max(self.stored);
        if self.scales[i].staging.len() >= self.config.params.batch_size() {
            self.push_staging(i)?;
            self.settle(i)?;
        }
        Ok(())
    }

    /// Scale for `x`: the last scale whose minimum is `<= x`, or scale 0.
    fn route(&self, x: &K) -> usize {
        let n = self.scales.len();
        if n <= 1 {
            return 0;
        }
        // Minima increase with the scale index.
        let tail = &self.scales[1..];
        tail.partition_point(|s| s.min_key().is_some_and(|m| m <= x))
    }

    fn materialize(&mut self) -> Result<()> {
        let j = self.allocator.add_level();
        let (p, seed, instr) = (self.config.params, self.rng.next_u64(), self.config.instrument);
        let sub = match self.config.fixed_n {
            Some(n) => {
                let (k, s) = fixed_size(p.eps_log2, n)?;
                SubSketch::fixed(p, j as u32, k, s, seed, instr)?
            }
            None => SubSketch::new(p, j as u32, self.allocator.space_target(j)?, seed, instr)?,
        };
        self.scales.push(Scale {
            sub,
            staging: Vec::new(),
            staging_min: None,
        });
        Ok(())
    }

    /// Moves staged keys of scale `i` through its sampler, running steps.
    fn push_staging(&mut self, i: usize) -> Result<()> {
        let scale = &mut self.scales[i];
        if scale.staging.is_empty() {
            return Ok(());
        }
        let batch = core::mem::take(&mut scale.staging);
        scale.staging_min = None;
        let h = scale.sub.hierarchy_mut();
        let kept = h.sample(batch);
        if kept.is_empty() {
            self.recount();
            return Ok(());
        }
        h.accept(kept);
        self.run_pending(i)
    }

    fn run_pending(&mut self, i: usize) -> Result<()> {
        while self.scales[i].sub.hierarchy().has_pending() {
            self.scales[i].sub.hierarchy_mut().step()?;
            self.after_step(i)?;
        }
        self.scales[i].sub.observe();
        Ok(())
    }

    fn after_step(&mut self, level: usize) -> Result<()> {
        let space = self.scales[level].sub.hierarchy().space();
        self.allocator.note_step(level, space)?;
        self.recount();
        if self.trace.is_some() {
            let row = TraceRow {
                step: self.allocator.steps(),
                level,
                s_hat: space,
                phi_level: self.allocator.potential(level)?,
                phi_child: self.allocator.potential(level + 1)?,
                accumulator: self.allocator.accumulator(level),
                stored: self.stored,
            };
            if let Some(t) = self.trace.as_mut() {
                t.rows.push(row);
            }
        }
        Ok(())
    }

    fn recount(&mut self) {
        self.stored = self
            .scales
            .iter()
            .map(|s| s.sub.hierarchy().len() + s.staging.len())
            .sum();
        self.peak_stored = self.peak_stored.max(self.stored);
    }

    fn event(&mut self, e: Event) {
        if let Some(ev) = self.events.as_mut() {
            ev.push(e);
        }
    }

    /// Handles overflow of scale `i`, then reconciles space targets.
    fn settle(&mut self, i: usize) -> Result<()> {
        if self.scales[i].sub.overflowing() {
            self.overflow(i)?;
        }
        self.reconcile()
    }

    fn overflow(&mut self, i: usize) -> Result<()> {
        // Staged keys of this scale must take part in the drain.
        self.push_staging(i)?;
        if !self.scales[i].sub.overflowing() {
            return Ok(());
        }
        self.event(Event::Overflow(i));
        if i + 1 == self.scales.len() {
            self.materialize()?;
        }
        let batch = self.scales[i].sub.drain();
        self.recount();
        self.push_staging(i + 1)?;
        self.event(Event::Reset(i + 1));
        self.allocator.on_reset(i + 1)?;
        self.scales[i + 1].sub.reset();
        self.event(Event::Deliver(i + 1));
        self.scales[i + 1].sub.receive_batch(batch)?;
        self.run_pending(i + 1)?;
        self.settle(i + 1)
    }

    /// Resizes every scale whose target differs from its current space.
    fn reconcile(&mut self) -> Result<()> {
        'outer: loop {
            for j in 0..self.scales.len() {
                let h = self.scales[j].sub.hierarchy();
                if h.layout().levels == 0 || h.is_fixed() {
                    continue;
                }
                let target = self.allocator.space_target(j)?;
                if target != self.scales[j].sub.hierarchy().space() {
                    self.scales[j].sub.hierarchy_mut().resize(target)?;
                    self.after_step(j)?;
                    self.scales[j].sub.observe();
                    if self.scales[j].sub.overflowing() {
                        self.overflow(j)?;
                    }
                    continue 'outer;
                }
            }
            return Ok(());
        }
    }

    /// Estimated number of stream keys strictly below `x`.
    pub fn query(&self, x: &K) -> u64 {
        self.scales
            .iter()
            .map(|s| s.sub.rank_sub(x) + s.staging.iter().filter(|y| *y < x).count() as u64)
            .sum()
    }

    pub fn query_grid(&self, xs: &[K]) -> Vec<u64> {
        xs.iter().map(|x| self.query(x)).collect()
    }

    /// Every stored key, sorted.
    pub fn memory_snapshot(&self) -> Vec<K> {
        let mut all: Vec<K> = self
            .scales
            .iter()
            .flat_map(|s| s.sub.hierarchy().keys().chain(s.staging.iter()))
            .cloned()
            .collect();
        all.sort();
        all
    }

    /// Whether `x` is stored anywhere.
    pub fn remembers(&self, x: &K) -> bool {
        self.scales.iter().any(|s| {
            s.staging.contains(x)
                || s.sub.hierarchy().buffer().binary_search(x).is_ok()
                || s
                    .sub
                    .hierarchy()
                    .compactors()
                    .iter()
                    .any(|c| c.items().binary_search(x).is_ok())
        })
    }

    pub fn stats(&self) -> Result<&SpaceTrace> {
        self.trace.as_ref().ok_or(Error::InstrumentationDisabled)
    }

    /// Checks the cross-scale invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> core::result::Result<(), &'static str> {
        for w in self.scales.windows(2) {
            if let (Some(hi), Some(lo)) = (w[0].max_key(), w[1].min_key()) {
                if hi > lo {
                    return Err("scale ranges overlap");
                }
            }
        }
        for s in &self.scales {
            let w = s.sub.total_weight();
            let r = s.sub.horizon();
            if w > 3 * r {
                return Err("weight above 3R");
            }
            if s.sub.filled() && w < r {
                return Err("weight fell below R");
            }
            if s.sub.hierarchy().has_pending() {
                return Err("pending keys between operations");
            }
            let (lhs, rhs) = s.sub.hierarchy().weight_balance();
            if lhs != rhs {
                return Err("weight ledger out of balance");
            }
        }
        if self.stored != self.memory_snapshot().len() {
            return Err("stored count disagrees with snapshot");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sketch(a: u32, seed: u64) -> RelativeSketch<u64> {
        let mut c = SketchConfig::new(Params::constant(a), seed);
        c.instrument = true;
        c.trace = true;
        RelativeSketch::new(c)
    }

    #[test]
    fn empty_and_first_insert() {
        let mut s = sketch(3, 0);
        assert_eq!(s.query(&10), 0);
        assert!(s.memory_snapshot().is_empty());
        assert!(s.stats().unwrap().rows.is_empty());
        s.insert(5).unwrap();
        assert_eq!(s.scale_count(), 1);
        assert_eq!(s.memory_snapshot(), alloc::vec![5]);
        assert_eq!(s.query(&6), 1);
        assert_eq!(s.query(&5), 0);
    }

    #[test]
    fn reset_precedes_delivery() {
        let mut s = sketch(2, 1);
        for x in 0..2000u64 {
            s.insert((x * 7919) % 2003).unwrap();
            s.check_invariants().unwrap();
        }
        let ev = s.events().unwrap();
        assert!(ev.contains(&Event::Overflow(0)));
        for (idx, e) in ev.iter().enumerate() {
            if let Event::Deliver(j) = e {
                assert_eq!(ev[idx - 1], Event::Reset(*j));
            }
        }
        assert_eq!(s.stats().unwrap().rows.len() as u64, s.allocator().steps());
    }
}
