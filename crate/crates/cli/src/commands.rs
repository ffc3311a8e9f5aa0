//! Subcommand implementations. Each returns the bytes to emit so callers
//! decide where they go.

use std::fmt::Display;
use std::path::PathBuf;

use relquant_core::eval::adversary::{build_adversary_stream, KeepSmallest, DEFAULT_TRIALS};
use relquant_core::eval::generators::{gen_stream, GenKind, TreeParams};
use relquant_core::eval::measure::{log_spaced_ranks, relative_error};
use relquant_core::eval::{Label, RankOracle};
use relquant_core::{Params, RelativeSketch, SketchConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::bench::{run_matrix, BenchSpec};
use crate::config::{parse_eps, Grid, ParamsInfo};
use crate::error::{CliError, CliResult};
use crate::keys::{self, KeyKind, Keys};
use crate::report::{render, to_json, trace_csv, Format, QueryRow, RunReport};
use crate::snapshot;

pub fn cmd_gen(kind: GenKind, n: usize, seed: u64, tree: TreeParams) -> CliResult<String> {
    let v = gen_stream(kind, n, seed, tree)?;
    let mut out = Vec::with_capacity(n * 8);
    keys::write_keys(&mut out, &v).map_err(|e| CliError::io("<buffer>", e))?;
    String::from_utf8(out).map_err(|e| CliError::config(e.to_string()))
}

/// Keys accepted on the wire.
pub trait WireKey: Ord + Clone + Display + Serialize + DeserializeOwned {
    const KIND: KeyKind;
    fn parse(s: &str) -> CliResult<Self>;
}

impl WireKey for i128 {
    const KIND: KeyKind = KeyKind::Int;
    fn parse(s: &str) -> CliResult<Self> {
        keys::parse_int(s)
    }
}

impl WireKey for Label {
    const KIND: KeyKind = KeyKind::Label;
    fn parse(s: &str) -> CliResult<Self> {
        keys::parse_label(s)
    }
}

#[derive(Clone, Debug)]
pub struct RunArgs {
    pub params: Params,
    pub seed: u64,
    pub grid: Grid,
    /// Key file text; `None` for no input.
    pub input: Option<String>,
    pub resume: Option<PathBuf>,
    pub snapshot_out: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
    pub format: Format,
}

pub fn cmd_run(args: &RunArgs) -> CliResult<String> {
    let keys = match &args.input {
        Some(text) => keys::parse_keys(text)?,
        None => Keys::Int(Vec::new()),
    };
    let resume = match &args.resume {
        Some(p) => Some(snapshot::peek(p)?),
        None => None,
    };
    // The snapshot fixes the key kind when the input is empty.
    let kind = match (&resume, keys.kind()) {
        (Some((_, k)), Some(ik)) if *k != ik => {
            return Err(CliError::config("input key kind differs from the snapshot"))
        }
        (Some((_, k)), _) => *k,
        (None, k) => k.unwrap_or(KeyKind::Int),
    };
    let resume_text = resume.as_ref().map(|(t, _)| t.as_str());
    match (kind, keys) {
        (KeyKind::Int, Keys::Int(v)) => run_typed(args, v, resume_text),
        (KeyKind::Label, Keys::Label(v)) => run_typed(args, v, resume_text),
        (KeyKind::Label, Keys::Int(v)) if v.is_empty() => run_typed::<Label>(args, Vec::new(), resume_text),
        _ => Err(CliError::config("input key kind differs from the snapshot")),
    }
}

fn run_typed<K: WireKey>(args: &RunArgs, stream: Vec<K>, resume: Option<&str>) -> CliResult<String> {
    let mut sketch: RelativeSketch<K> = match resume {
        Some(text) => snapshot::parse(text)?,
        None => {
            let mut c = SketchConfig::new(args.params, args.seed);
            c.trace = args.trace_out.is_some();
            RelativeSketch::new(c)
        }
    };
    for x in &stream {
        sketch.insert(x.clone())?;
    }
    if let Some(p) = &args.snapshot_out {
        snapshot::write(p, K::KIND, &sketch)?;
    }
    if let Some(p) = &args.trace_out {
        let trace = sketch
            .stats()
            .map_err(|_| CliError::config("the resumed snapshot was recorded without a trace"))?;
        std::fs::write(p, trace_csv(trace)?).map_err(|e| CliError::io(p, e))?;
    }

    let local = RankOracle::new(&stream);
    // After a resume the earlier input is unknown, so exact ranks are too.
    let oracle = resume.is_none().then_some(&local);
    let targets: Vec<(K, Option<u64>)> = match &args.grid {
        Grid::Keys(ks) => ks.iter().map(|s| Ok((K::parse(s)?, None))).collect::<CliResult<_>>()?,
        Grid::Ranks(rs) => resolve(&local, rs),
        Grid::Log => resolve(&local, &log_spaced_ranks(stream.len() as u64)),
    };
    let queries = targets
        .into_iter()
        .map(|(key, target_rank)| {
            let estimate = sketch.query(&key);
            let true_rank = oracle.as_ref().map(|o| o.exact_rank(&key));
            QueryRow {
                key: key.to_string(),
                target_rank,
                estimate,
                true_rank,
                rel_err: true_rank.map(|r| relative_error(estimate, r)),
            }
        })
        .collect::<Vec<_>>();
    let cfg = sketch.config();
    let report = RunReport {
        format: "relquant-run".into(),
        version: 1,
        params: ParamsInfo::from(&cfg.params),
        seed: cfg.seed,
        n_seen: sketch.n_seen(),
        ingested: stream.len() as u64,
        stored: sketch.stored_len(),
        peak_space: sketch.peak_stored(),
        scales: sketch.scale_count(),
        steps: sketch.allocator().steps(),
        queries,
    };
    render(&report, &report.queries, args.format)
}

fn resolve<K: Ord + Clone>(oracle: &RankOracle<K>, ranks: &[u64]) -> Vec<(K, Option<u64>)> {
    ranks
        .iter()
        .filter_map(|&r| oracle.key_at(r).map(|k| (k.clone(), Some(r))))
        .collect()
}

pub fn cmd_bench(spec: &BenchSpec, threads: usize, format: Format) -> CliResult<String> {
    let rows = run_matrix(spec, threads)?;
    render(&rows, &rows, format)
}

#[derive(Clone, Debug)]
pub enum AdversaryAlgo {
    /// Keep the `s` smallest keys.
    KeepSmallest(usize),
    /// The relative-error sketch with `eps = 2^-a`.
    Sketch(u32),
}

impl AdversaryAlgo {
    /// `keep-smallest[:s]` (default `s = max(1, depth/4)`) or
    /// `sketch[:1/2^m]`.
    pub fn parse(s: &str, depth: u32) -> CliResult<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match name {
            "keep-smallest" => {
                let k = match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| CliError::config(format!("bad keep-smallest size {a:?}")))?,
                    None => (depth as usize / 4).max(1),
                };
                Ok(AdversaryAlgo::KeepSmallest(k))
            }
            "sketch" => Ok(AdversaryAlgo::Sketch(parse_eps(arg.unwrap_or("1/2^2"))?)),
            _ => Err(CliError::config(format!("unknown algorithm {s:?}"))),
        }
    }
}

pub fn cmd_adversary(depth: u32, algo: &AdversaryAlgo, trials: Option<usize>, seed: u64) -> CliResult<String> {
    let trials = trials.unwrap_or(DEFAULT_TRIALS);
    let t = match *algo {
        AdversaryAlgo::KeepSmallest(s) => build_adversary_stream(depth, &|_| KeepSmallest::new(s), trials, seed)?,
        AdversaryAlgo::Sketch(a) => build_adversary_stream(
            depth,
            &|s| RelativeSketch::new(SketchConfig::new(Params::constant(a), s)),
            trials,
            seed,
        )?,
    };
    to_json(&t)
}
