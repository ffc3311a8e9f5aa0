//! Error and space measurement across a matrix of generators and accuracy
//! levels, with seeds spread over worker threads.

use relquant_core::eval::generators::{gen_stream, GenKind, TreeParams};
use relquant_core::eval::measure::{aggregate, log_spaced_ranks, run_seed, ErrorReport, Queries, RankSketch, SeedRun};
use relquant_core::eval::RankOracle;
use relquant_core::{Params, RelativeSketch, SketchConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Worker count: `RELQUANT_THREADS` if set, else the available
/// parallelism.
pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("RELQUANT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or(avail)
}

/// Runs one sketch per seed on `threads` workers. Results come back in
/// seed order.
pub fn run_seeds<K, S, F>(factory: &F, seeds: &[u64], stream: &[K], keys: &[K], threads: usize) -> CliResult<Vec<SeedRun>>
where
    K: Clone + Sync,
    S: RankSketch<K>,
    F: Fn(u64) -> S + Sync,
{
    let threads = threads.clamp(1, seeds.len().max(1));
    let chunk = seeds.len().div_ceil(threads).max(1);
    let results: Vec<relquant_core::Result<Vec<SeedRun>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|&s| run_seed(factory, s, stream, keys)).collect()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(seeds.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Parallel counterpart of `measure_error`.
pub fn measure_error<K, S, F>(factory: &F, stream: &[K], ranks: &[u64], seeds: &[u64], threshold: f64, threads: usize) -> CliResult<ErrorReport>
where
    K: Ord + Clone + Sync,
    S: RankSketch<K>,
    F: Fn(u64) -> S + Sync,
{
    let oracle = RankOracle::new(stream);
    let q = Queries::resolve(&oracle, ranks);
    let runs = run_seeds(factory, seeds, stream, &q.keys, threads)?;
    Ok(aggregate(&q, &runs, threshold))
}

/// `C eps^-1 log(eps n) (log(1/eps) + log log n) log(1/eps)` with `C = 64`,
/// logs base 2. `log(eps n)` is clamped to at least 1.
pub fn space_bound(eps_log2: u32, n: u64) -> f64 {
    let a = f64::from(eps_log2).max(1.0);
    let inv = (1u64 << eps_log2) as f64;
    let log_n = (n.max(4) as f64).log2();
    let log_en = (log_n - f64::from(eps_log2)).max(1.0);
    64.0 * inv * log_en * (a + log_n.log2()) * a
}

/// Seeds `base, base+1, ...`.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub gen: String,
    pub eps: String,
    pub n: u64,
    pub seeds: usize,
    pub query_rank: u64,
    pub true_rank: u64,
    pub mean_rel_err: f64,
    pub rms_rel_err: f64,
    pub p90_rel_err: f64,
    pub exceed_frac: f64,
    pub peak_space: usize,
    pub space_bound: f64,
    pub space_ok: bool,
}

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub gens: Vec<GenKind>,
    pub eps_log2: Vec<u32>,
    pub n: usize,
    pub seeds: usize,
    pub seed: u64,
    /// High-probability mode with `log2(1/delta)`; constant mode if `None`.
    pub delta_log2: Option<u32>,
    pub tree: TreeParams,
}

/// Runs the matrix. The stream for each generator is drawn from `seed`;
/// sketch seeds are `seed, seed+1, ...`.
pub fn run_matrix(spec: &BenchSpec, threads: usize) -> CliResult<Vec<BenchRow>> {
    if spec.seeds == 0 {
        return Err(CliError::config("at least one seed is required"));
    }
    let mut rows = Vec::new();
    for &g in &spec.gens {
        let stream = gen_stream(g, spec.n, spec.seed, spec.tree)?;
        for &a in &spec.eps_log2 {
            let params = match spec.delta_log2 {
                Some(d) => Params::high_prob(a, d),
                None => Params::constant(a),
            };
            let factory = |s: u64| RelativeSketch::new(SketchConfig::new(params, s));
            let eps = 1.0 / (1u64 << a) as f64;
            let seeds = seed_list(spec.seed, spec.seeds);
            let r = measure_error(&factory, &stream, &log_spaced_ranks(spec.n as u64), &seeds, eps, threads)?;
            let bound = space_bound(a, spec.n as u64);
            for q in r.queries {
                rows.push(BenchRow {
                    gen: g.name().to_string(),
                    eps: format!("1/2^{a}"),
                    n: spec.n as u64,
                    seeds: r.seeds,
                    query_rank: q.query_rank,
                    true_rank: q.true_rank,
                    mean_rel_err: q.mean_rel_err,
                    rms_rel_err: q.rms_rel_err,
                    p90_rel_err: q.p90_rel_err,
                    exceed_frac: q.exceed_frac,
                    peak_space: q.peak_space,
                    space_bound: bound,
                    space_ok: q.peak_space as f64 <= bound,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use relquant_core::eval::measure::ExactSketch;

    #[test]
    fn parallel_matches_sequential() {
        let stream: Vec<u64> = (0..3000u64).map(|i| (i * 2654435761) % 10007).collect();
        let ranks = log_spaced_ranks(3000);
        let seeds = seed_list(5, 7);
        let f = |s: u64| RelativeSketch::new(SketchConfig::new(Params::constant(4), s));
        let seq = relquant_core::eval::measure::measure_error(&f, &stream, &ranks, &seeds, 1.0 / 16.0).unwrap();
        for t in [1, 3, 8] {
            assert_eq!(measure_error(&f, &stream, &ranks, &seeds, 1.0 / 16.0, t).unwrap(), seq);
        }
        let exact = measure_error(&|_| ExactSketch::default(), &stream, &ranks, &seeds, 0.0, 2).unwrap();
        assert!(exact.queries.iter().all(|q| q.rms_rel_err == 0.0));
    }

    #[test]
    fn bound_values() {
        // eps = 1/64, n = 2^20: 64 * 64 * 14 * (6 + log2 20) * 6.
        let b = space_bound(6, 1 << 20);
        let expect = 64.0 * 64.0 * 14.0 * (6.0 + 20f64.log2()) * 6.0;
        assert!((b - expect).abs() < 1e-6);
    }
}
