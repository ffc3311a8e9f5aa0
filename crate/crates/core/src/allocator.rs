//! Online space allocation across scales.
//!
//! Time advances in steps. Each scale's life is cut into intervals by its
//! resets. The potential of an interval at scale `i` is the sum of the
//! potentials of the scale-`(i+1)` intervals it meets. Below the last live
//! scale sits an imaginary scale that resets every step, so every one of
//! its intervals has potential 1.
//!
//! Closed intervals are frozen at the potential they had when they closed.
//! An open interval's potential is its committed sum plus the potential of
//! the open interval one scale down.

use alloc::vec::Vec;

use crate::params::Params;
use crate::{pow2_neg, Error, Result};

#[derive(Clone, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct Level {
    start: u64,
    committed: u128,
    accumulator: f64,
    /// Parent intervals met by the open interval so far.
    parents: u32,
    /// Steps on this scale since either it or its child last reset.
    steps_in_child: u64,
}

/// Extremes observed over a run.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AllocatorStats {
    pub max_accumulator: f64,
    pub max_parents: u32,
    pub max_steps_per_child: u64,
    pub resets: u64,
    pub max_potential: u128,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Allocator {
    params: Params,
    levels: Vec<Level>,
    steps: u64,
    stats: AllocatorStats,
}

/// `log2` of `x` rounded up to a power of two.
fn ceil_log2(x: u128) -> u32 {
    if x <= 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// `ceil(log2 log2 max(4, t))`.
pub fn loglog_term(t: u64) -> u64 {
    let t = u128::from(t.max(4));
    let mut m = 0u32;
    // Smallest m with t <= 2^(2^m).
    while (1u32 << m) < 128 && t > 1u128 << (1u32 << m) {
        m += 1;
    }
    u64::from(m).max(1)
}

impl Allocator {
    pub fn new(params: Params) -> Self {
        Self {
            params,
            levels: Vec::new(),
            steps: 0,
            stats: AllocatorStats::default(),
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn stats(&self) -> AllocatorStats {
        let mut s = self.stats.clone();
        for l in &self.levels {
            s.max_parents = s.max_parents.max(l.parents);
        }
        s
    }

    /// Materializes the next scale with a fresh open interval.
    pub fn add_level(&mut self) -> usize {
        self.levels.push(Level {
            start: self.steps,
            parents: 1,
            ..Level::default()
        });
        self.levels.len() - 1
    }

    /// Potential of the open interval at `level`; levels past the last
    /// materialized one have potential 1.
    pub fn potential(&self, level: usize) -> Result<u128> {
        let mut p: u128 = 1;
        for l in self.levels.iter().skip(level) {
            p = p.checked_add(l.committed).ok_or(Error::PotentialOverflow)?;
        }
        Ok(p)
    }

    /// Advances time by one step taken on `level` at space `space`.
    pub fn note_step(&mut self, level: usize, space: usize) -> Result<()> {
        let steps = self.steps;
        if let Some(last) = self.levels.last_mut() {
            // The imaginary scale closes the unit interval of the previous
            // step; it counts only if that step fell inside `last`'s interval.
            if steps > last.start {
                last.committed = last.committed.checked_add(1).ok_or(Error::PotentialOverflow)?;
            }
        }
        self.steps += 1;
        let k = self.params.block_size();
        let has_child = level + 1 < self.levels.len();
        let l = &mut self.levels[level];
        l.accumulator += pow2_neg((space / k) as u64);
        self.stats.max_accumulator = self.stats.max_accumulator.max(l.accumulator);
        if has_child {
            l.steps_in_child += 1;
            self.stats.max_steps_per_child = self.stats.max_steps_per_child.max(l.steps_in_child);
        }
        let top = self.potential(0)?;
        self.stats.max_potential = self.stats.max_potential.max(top);
        Ok(())
    }

    /// Closes the open interval at `level` and opens a new one.
    pub fn on_reset(&mut self, level: usize) -> Result<()> {
        let p = self.potential(level)?;
        if level > 0 {
            let parent = &mut self.levels[level - 1];
            parent.committed = parent.committed.checked_add(p).ok_or(Error::PotentialOverflow)?;
            parent.steps_in_child = 0;
        }
        let l = &mut self.levels[level];
        self.stats.max_parents = self.stats.max_parents.max(l.parents);
        *l = Level {
            start: self.steps,
            parents: 1,
            ..Level::default()
        };
        if let Some(child) = self.levels.get_mut(level + 1) {
            child.parents += 1;
        }
        self.stats.resets += 1;
        Ok(())
    }

    /// Feasibility sum of the open interval at `level`.
    pub fn accumulator(&self, level: usize) -> f64 {
        self.levels.get(level).map_or(0.0, |l| l.accumulator)
    }

    pub fn loglog_term(&self) -> u64 {
        loglog_term(self.steps)
    }

    /// Space target for `level` under the current potentials.
    pub fn space_target(&self, level: usize) -> Result<usize> {
        let parent = self.potential(level)?;
        let child = self.potential(level + 1)?;
        Ok(space_rule(&self.params, parent, child, self.loglog_term()))
    }
}

/// `unit * (log(ceil2(parent)/ceil2(child)) + 5 log(1/eps) + 5 loglog)`.
pub fn space_rule(params: &Params, parent: u128, child: u128, loglog: u64) -> usize {
    let ratio = u64::from(ceil_log2(parent).saturating_sub(ceil_log2(child)));
    let bracket = ratio + 5 * u64::from(params.eps_log2) + 5 * loglog;
    (params.space_unit() * bracket) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_arithmetic() {
        let p = Params::constant(2);
        assert_eq!(space_rule(&p, 8, 2, 3), 108);
        assert_eq!(space_rule(&p, 7, 2, 3), 108);
        assert_eq!(space_rule(&p, 5, 5, 3), 4 * (10 + 15));
    }

    #[test]
    fn loglog_values() {
        assert_eq!(loglog_term(0), 1);
        assert_eq!(loglog_term(16), 2);
        assert_eq!(loglog_term(17), 3);
        assert_eq!(loglog_term(256), 3);
        assert_eq!(loglog_term(257), 4);
        assert_eq!(loglog_term(u64::MAX), 6);
    }

    #[test]
    fn potentials_without_resets() {
        let mut a = Allocator::new(Params::constant(2));
        a.add_level();
        a.add_level();
        assert_eq!(a.potential(0).unwrap(), 1);
        a.note_step(0, 8).unwrap();
        assert!(a.potential(1).unwrap() >= 1);
        for _ in 1..10 {
            a.note_step(1, 8).unwrap();
        }
        assert_eq!(a.potential(0).unwrap(), 10);
    }

    #[test]
    fn reset_commits_to_parent() {
        let mut a = Allocator::new(Params::constant(2));
        a.add_level();
        a.add_level();
        for _ in 0..5 {
            a.note_step(1, 8).unwrap();
        }
        let p = a.potential(1).unwrap();
        let before = a.levels[0].committed;
        a.on_reset(1).unwrap();
        assert_eq!(a.levels[0].committed, before + p);
        a.on_reset(1).unwrap();
        assert!(a.levels[0].committed > before + p);
        assert_eq!(a.accumulator(1), 0.0);
    }

    #[test]
    fn accumulator_one_step() {
        let mut a = Allocator::new(Params::constant(2));
        a.add_level();
        assert_eq!(a.accumulator(0), 0.0);
        a.note_step(0, 12).unwrap();
        assert_eq!(a.accumulator(0), 0.125);
    }
}
