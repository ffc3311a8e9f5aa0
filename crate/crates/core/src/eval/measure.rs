//! Error and space measurement over independent seeds.

use alloc::vec::Vec;

use super::oracle::RankOracle;
use crate::hierarchy::Hierarchy;
use crate::sketch::RelativeSketch;
use crate::Result;

/// A rank sketch under measurement.
pub trait RankSketch<K> {
    fn insert(&mut self, x: K) -> Result<()>;
    fn estimate(&self, x: &K) -> u64;
    fn stored_len(&self) -> usize;
    /// Largest stored count seen, when the sketch tracks it internally.
    fn peak_stored(&self) -> Option<usize> {
        None
    }
}

impl<K: Ord + Clone> RankSketch<K> for RelativeSketch<K> {
    fn insert(&mut self, x: K) -> Result<()> {
        RelativeSketch::insert(self, x)
    }
    fn estimate(&self, x: &K) -> u64 {
        self.query(x)
    }
    fn stored_len(&self) -> usize {
        RelativeSketch::stored_len(self)
    }
    fn peak_stored(&self) -> Option<usize> {
        Some(RelativeSketch::peak_stored(self))
    }
}

impl<K: Ord + Clone> RankSketch<K> for Hierarchy<K> {
    fn insert(&mut self, x: K) -> Result<()> {
        Hierarchy::insert(self, x)
    }
    fn estimate(&self, x: &K) -> u64 {
        self.rank_estimate(x)
    }
    fn stored_len(&self) -> usize {
        self.len()
    }
}

/// Stores every key.
#[derive(Clone, Debug, Default)]
pub struct ExactSketch<K> {
    keys: Vec<K>,
}

impl<K: Ord + Clone> RankSketch<K> for ExactSketch<K> {
    fn insert(&mut self, x: K) -> Result<()> {
        let at = self.keys.partition_point(|y| *y <= x);
        self.keys.insert(at, x);
        Ok(())
    }
    fn estimate(&self, x: &K) -> u64 {
        self.keys.partition_point(|y| y < x) as u64
    }
    fn stored_len(&self) -> usize {
        self.keys.len()
    }
}

/// Query keys resolved from target ranks.
#[derive(Clone, Debug)]
pub struct Queries<K> {
    pub ranks: Vec<u64>,
    pub keys: Vec<K>,
    pub true_ranks: Vec<u64>,
}

impl<K: Ord + Clone> Queries<K> {
    /// Resolves each target rank to the oracle key at that position; ranks
    /// past the end are dropped.
    pub fn resolve(oracle: &RankOracle<K>, ranks: &[u64]) -> Self {
        let mut q = Queries {
            ranks: Vec::new(),
            keys: Vec::new(),
            true_ranks: Vec::new(),
        };
        for &r in ranks {
            if let Some(k) = oracle.key_at(r) {
                q.ranks.push(r);
                q.true_ranks.push(oracle.exact_rank(k));
                q.keys.push(k.clone());
            }
        }
        q
    }
}

/// Outcome of one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub estimates: Vec<u64>,
    pub peak_space: usize,
    pub final_space: usize,
}

pub fn run_seed<K, S, F>(factory: &F, seed: u64, stream: &[K], keys: &[K]) -> Result<SeedRun>
where
    K: Clone,
    S: RankSketch<K>,
    F: Fn(u64) -> S,
{
    let mut s = factory(seed);
    let mut peak = 0;
    for x in stream {
        s.insert(x.clone())?;
        peak = peak.max(s.stored_len());
    }
    if let Some(p) = s.peak_stored() {
        peak = peak.max(p);
    }
    Ok(SeedRun {
        seed,
        estimates: keys.iter().map(|k| s.estimate(k)).collect(),
        peak_space: peak,
        final_space: s.stored_len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryReport {
    pub query_rank: u64,
    pub true_rank: u64,
    pub mean_rel_err: f64,
    pub rms_rel_err: f64,
    pub p90_rel_err: f64,
    /// Fraction of seeds whose relative error exceeds the threshold.
    pub exceed_frac: f64,
    pub peak_space: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorReport {
    pub seeds: usize,
    pub threshold: f64,
    pub queries: Vec<QueryReport>,
    pub peak_space: usize,
    pub mean_peak_space: f64,
}

pub fn relative_error(estimate: u64, rank: u64) -> f64 {
    (estimate as f64 - rank as f64).abs() / rank.max(1) as f64
}

/// Nearest-rank quantile of an unsorted sample.
fn quantile(xs: &mut [f64], q: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let idx = libm::ceil(q * xs.len() as f64) as usize;
    xs[idx.clamp(1, xs.len()) - 1]
}

/// Summarizes seed runs; `threshold` sets the exceedance cut.
pub fn aggregate<K>(queries: &Queries<K>, runs: &[SeedRun], threshold: f64) -> ErrorReport {
    let peak_space = runs.iter().map(|r| r.peak_space).max().unwrap_or(0);
    let mean_peak_space = if runs.is_empty() {
        0.0
    } else {
        runs.iter().map(|r| r.peak_space as f64).sum::<f64>() / runs.len() as f64
    };
    let m = runs.len().max(1) as f64;
    let reports = queries
        .ranks
        .iter()
        .zip(&queries.true_ranks)
        .enumerate()
        .map(|(qi, (&query_rank, &true_rank))| {
            let mut errs: Vec<f64> = runs.iter().map(|r| relative_error(r.estimates[qi], true_rank)).collect();
            let mean = errs.iter().sum::<f64>() / m;
            let rms = libm::sqrt(errs.iter().map(|e| e * e).sum::<f64>() / m);
            let exceed = errs.iter().filter(|&&e| e > threshold).count() as f64 / m;
            QueryReport {
                query_rank,
                true_rank,
                mean_rel_err: mean,
                rms_rel_err: rms,
                p90_rel_err: quantile(&mut errs, 0.9),
                exceed_frac: exceed,
                peak_space,
            }
        })
        .collect();
    ErrorReport {
        seeds: runs.len(),
        threshold,
        queries: reports,
        peak_space,
        mean_peak_space,
    }
}

/// Runs one sketch per seed over `stream` and reports relative errors at
/// the keys of the given target ranks.
pub fn measure_error<K, S, F>(factory: &F, stream: &[K], ranks: &[u64], seeds: &[u64], threshold: f64) -> Result<ErrorReport>
where
    K: Ord + Clone,
    S: RankSketch<K>,
    F: Fn(u64) -> S,
{
    let oracle = RankOracle::new(stream);
    let q = Queries::resolve(&oracle, ranks);
    let runs = seeds
        .iter()
        .map(|&s| run_seed(factory, s, stream, &q.keys))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&q, &runs, threshold))
}

/// Ranks `0`, then `2^j` and `3 * 2^(j-1)` below `n`, then `n - 1`.
pub fn log_spaced_ranks(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    out.push(0);
    let mut p = 1u64;
    while p < n {
        out.push(p);
        if p >= 2 && p + p / 2 < n {
            out.push(p + p / 2);
        }
        p = match p.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    out.push(n - 1);
    out.sort_unstable();
    out.dedup();
    out
}
