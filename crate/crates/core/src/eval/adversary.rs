//! Adaptive hard stream for memory-versus-error trade-offs.
//!
//! The stream of depth `k` is an anchor `e`, a depth-`(k-1)` stream above
//! `e`, then either `2^(k-1) - 1` fresh maxima (when the algorithm still
//! holds `e` with probability at least 1/2) or a second depth-`(k-1)` stream
//! placed above or below `e` by a fair coin.

use alloc::vec;
use alloc::vec::Vec;
use rand::RngCore;

use super::label::Label;
use super::oracle::RankOracle;
use crate::sketch::RelativeSketch;
use crate::{rng_from_seed, Error, Result, Rng};

/// A seeded algorithm that exposes its memory.
pub trait Remembering<K> {
    fn insert(&mut self, x: K);
    fn remembers(&self, x: &K) -> bool;
    fn stored_len(&self) -> usize;
    fn estimate_rank(&self, x: &K) -> f64;
}

/// Keeps the `s` smallest keys seen; estimates a rank by counting stored
/// keys below it.
#[derive(Clone, Debug)]
pub struct KeepSmallest<K> {
    s: usize,
    keys: Vec<K>,
}

impl<K: Ord> KeepSmallest<K> {
    pub fn new(s: usize) -> Self {
        Self { s, keys: Vec::new() }
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }
}

impl<K: Ord + Clone> Remembering<K> for KeepSmallest<K> {
    fn insert(&mut self, x: K) {
        let at = self.keys.partition_point(|y| *y <= x);
        if at < self.s {
            self.keys.insert(at, x);
            self.keys.truncate(self.s);
        }
    }

    fn remembers(&self, x: &K) -> bool {
        self.keys.binary_search(x).is_ok()
    }

    fn stored_len(&self) -> usize {
        self.keys.len()
    }

    fn estimate_rank(&self, x: &K) -> f64 {
        self.keys.partition_point(|y| y < x) as f64
    }
}

impl<K: Ord + Clone> Remembering<K> for RelativeSketch<K> {
    fn insert(&mut self, x: K) {
        // The harness only observes memory; a failed insert is not retried.
        let _ = RelativeSketch::insert(self, x);
    }

    fn remembers(&self, x: &K) -> bool {
        RelativeSketch::remembers(self, x)
    }

    fn stored_len(&self) -> usize {
        RelativeSketch::stored_len(self)
    }

    fn estimate_rank(&self, x: &K) -> f64 {
        self.query(x) as f64
    }
}

pub const MIN_TRIALS: usize = 30;
pub const DEFAULT_TRIALS: usize = 200;

/// One remember-probability estimate taken at the end of a first half.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Probe {
    /// Stream length when the estimate was taken.
    pub time: usize,
    pub depth: u32,
    pub anchor: Label,
    pub probability: f64,
    /// Probability within `[0.4, 0.6]`.
    pub ambiguous: bool,
    /// `true` for fresh maxima, `false` for the coin-placed second half.
    pub remembered: bool,
    /// For the coin case: whether the second half went above the anchor.
    pub above: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdversaryTranscript {
    pub depth: u32,
    pub trials: usize,
    pub stream: Vec<Label>,
    pub query: Label,
    pub query_rank: u64,
    pub probes: Vec<Probe>,
    /// Mean stored-key count after each insertion.
    pub mean_space: Vec<f64>,
    pub max_mean_space: f64,
    pub mean_sq_error: f64,
    /// `max_t E[S_t] + E[err^2]`.
    pub objective: f64,
}

struct Builder<'a, A, F> {
    factory: &'a F,
    trials: usize,
    seeds: Vec<u64>,
    coins: Rng,
    stream: Vec<Label>,
    probes: Vec<Probe>,
    _algo: core::marker::PhantomData<A>,
}

impl<A, F> Builder<'_, A, F>
where
    A: Remembering<Label>,
    F: Fn(u64) -> A,
{
    fn push(&mut self, x: Label) -> Result<Label> {
        self.stream.push(x);
        Ok(x)
    }

    fn remember_probability(&self, e: &Label) -> f64 {
        let hits = self
            .seeds
            .iter()
            .filter(|&&seed| {
                let mut a = (self.factory)(seed);
                for x in &self.stream {
                    a.insert(*x);
                }
                a.remembers(e)
            })
            .count();
        hits as f64 / self.seeds.len() as f64
    }

    /// Appends a depth-`k` stream inside the open interval `(lo, hi)` and
    /// returns its designated query key.
    fn build(&mut self, k: u32, lo: Label, hi: Label) -> Result<Option<Label>> {
        if k == 0 {
            return Ok(None);
        }
        let e = self.push(mediant(&lo, &hi)?)?;
        let first_start = self.stream.len();
        let first = self.build(k - 1, e, hi)?;
        let Some(first) = first else {
            return Ok(Some(e));
        };
        let first_keys = &self.stream[first_start..];
        let first_min = *first_keys.iter().min().expect("nonempty subtree");
        let mut top = *first_keys.iter().max().expect("nonempty subtree");
        let p = self.remember_probability(&e);
        let remembered = p >= 0.5;
        let mut probe = Probe {
            time: self.stream.len(),
            depth: k,
            anchor: e,
            probability: p,
            ambiguous: (0.4..=0.6).contains(&p),
            remembered,
            above: None,
        };
        let designated = if remembered {
            self.probes.push(probe);
            for _ in 0..(1usize << (k - 1)) - 1 {
                top = self.push(mediant(&top, &hi)?)?;
            }
            first
        } else {
            let above = self.coins.next_u32() & 1 == 1;
            probe.above = Some(above);
            self.probes.push(probe);
            let (l, h) = if above { (e, first_min) } else { (lo, e) };
            self.build(k - 1, l, h)?.expect("depth at least one")
        };
        Ok(Some(designated))
    }
}

fn mediant(a: &Label, b: &Label) -> Result<Label> {
    a.mediant(b).ok_or(Error::InvalidParameter("label precision exhausted"))
}

/// Builds the depth-`k` stream against `factory`, estimating remember
/// probabilities over `trials` algorithm seeds, then measures space and the
/// squared error at the designated key over the same seeds.
pub fn build_adversary_stream<A, F>(k: u32, factory: &F, trials: usize, seed: u64) -> Result<AdversaryTranscript>
where
    A: Remembering<Label>,
    F: Fn(u64) -> A,
{
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter("at least 30 trials are required"));
    }
    if k == 0 || k > 24 {
        return Err(Error::InvalidParameter("depth must be in 1..=24"));
    }
    let mut seed_rng = rng_from_seed(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| seed_rng.next_u64()).collect();
    let mut b = Builder {
        factory,
        trials,
        seeds,
        coins: rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15),
        stream: Vec::with_capacity((1usize << k) - 1),
        probes: Vec::new(),
        _algo: core::marker::PhantomData,
    };
    let query = b
        .build(k, Label::int(0), Label::TOP)?
        .expect("depth at least one");
    let oracle = RankOracle::new(&b.stream);
    let query_rank = oracle.exact_rank(&query);

    let mut space = vec![0.0f64; b.stream.len()];
    let mut sq = 0.0f64;
    for &s in &b.seeds {
        let mut a = factory(s);
        for (t, x) in b.stream.iter().enumerate() {
            a.insert(*x);
            space[t] += a.stored_len() as f64;
        }
        let d = a.estimate_rank(&query) - query_rank as f64;
        sq += d * d;
    }
    let n = b.trials as f64;
    for v in &mut space {
        *v /= n;
    }
    let max_mean_space = space.iter().copied().fold(0.0, f64::max);
    let mean_sq_error = sq / n;
    Ok(AdversaryTranscript {
        depth: k,
        trials,
        stream: b.stream,
        query,
        query_rank,
        probes: b.probes,
        mean_space: space,
        max_mean_space,
        mean_sq_error,
        objective: max_mean_space + mean_sq_error,
    })
}
