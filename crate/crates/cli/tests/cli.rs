use std::path::Path;
use std::process::Command;

use relquant::bench::{run_matrix, seed_list, BenchSpec};
use relquant::commands::{cmd_run, RunArgs};
use relquant::config::Grid;
use relquant::report::{Format, RunReport};
use relquant_core::eval::generators::{gen_stream, GenKind, TreeParams};
use relquant_core::eval::measure::{log_spaced_ranks, measure_error};
use relquant_core::{Params, RelativeSketch, SketchConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relquant"))
}

fn run_ok(args: &[&str]) -> Vec<u8> {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn gen_outputs() {
    assert_eq!(run_ok(&["gen", "--gen", "sorted", "--n", "3"]), b"0\n1\n2\n");
    let a = run_ok(&["gen", "--gen", "uniform", "--n", "500", "--seed", "4"]);
    let b = run_ok(&["gen", "--gen", "uniform", "--n", "500", "--seed", "4"]);
    assert_eq!(a, b);
    let t = run_ok(&["gen", "--gen", "tree_instance", "--n", "100000"]);
    assert_eq!(t.iter().filter(|&&c| c == b'\n').count(), 100_000);
}

#[test]
fn run_is_deterministic_and_traced() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "in.txt");
    run_ok(&["gen", "--gen", "uniform", "--n", "20000", "--seed", "1", "--out", &input]);
    let mut outputs = Vec::new();
    for i in 0..2 {
        let trace = path(dir.path(), &format!("trace{i}.csv"));
        let report = run_ok(&["run", &input, "--eps", "1/2^5", "--seed", "9", "--trace", &trace]);
        outputs.push((report, std::fs::read(&trace).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let trace = String::from_utf8(outputs[0].1.clone()).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "step,level,s_hat,phi_level,phi_child,accumulator");
    assert!(trace.lines().count() > 1);
    let report: RunReport = serde_json::from_slice(&outputs[0].0).unwrap();
    assert_eq!(report.ingested, 20_000);
    assert!(report.queries.iter().all(|q| q.true_rank.is_some()));
}

#[test]
fn empty_input_answers_zero() {
    for grid in ["log", "keys:1,2,3", "ranks:0,5"] {
        let out = bin()
            .args(["run", "-", "--grid", grid])
            .stdin(std::process::Stdio::null())
            .output()
            .unwrap();
        assert!(out.status.success());
        let r: RunReport = serde_json::from_slice(&out.stdout).unwrap();
        assert!(r.queries.iter().all(|q| q.estimate == 0));
    }
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["run", "/definitely/missing"]), 4);
    assert_eq!(code(&["run", "-", "--eps", "0.01"]), 2);
    assert_eq!(code(&["run", "-", "--mode", "highprob"]), 2);
    assert_eq!(code(&["run", "-", "--mode", "highprob", "--delta", "0.7"]), 2);
    assert_eq!(code(&["gen", "--gen", "zipf", "--n", "3"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let mixed = path(dir.path(), "mixed.txt");
    std::fs::write(&mixed, "1\n2/3\n").unwrap();
    assert_eq!(code(&["run", &mixed]), 2);
    let out = path(dir.path(), "no/such/dir/out.json");
    assert_eq!(code(&["gen", "--gen", "sorted", "--n", "3", "--out", &out]), 4);
}

#[test]
fn label_keys_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = path(dir.path(), "labels.txt");
    let text: String = (1..=300).map(|i| format!("{}/{}\n", i, 7)).collect();
    std::fs::write(&input, text).unwrap();
    let out = run_ok(&["run", &input, "--eps", "1/2^3", "--grid", "keys:1/7,100/7,3/1"]);
    let r: RunReport = serde_json::from_slice(&out).unwrap();
    assert_eq!(r.queries[0].estimate, 0);
    assert_eq!(r.queries[2].true_rank, Some(20));
    assert_eq!(r.queries[2].estimate, 20);
}

#[test]
fn snapshot_resume_matches_single_pass() {
    let dir = tempfile::tempdir().unwrap();
    let stream = gen_stream(GenKind::Permutation, 30_000, 3, TreeParams::default()).unwrap();
    let to_text = |v: &[u64]| v.iter().map(|x| format!("{x}\n")).collect::<String>();
    let grid = Grid::Keys(["10", "500", "7000", "29999"].map(String::from).to_vec());
    let base = RunArgs {
        params: Params::constant(5),
        seed: 11,
        grid,
        input: Some(to_text(&stream)),
        resume: None,
        snapshot_out: None,
        trace_out: None,
        format: Format::Json,
    };
    let mut whole = base.clone();
    let whole_snap = dir.path().join("whole.json");
    whole.snapshot_out = Some(whole_snap.clone());
    let whole_report: RunReport = serde_json::from_str(&cmd_run(&whole).unwrap()).unwrap();

    let mut first = base.clone();
    let snap = dir.path().join("half.json");
    first.input = Some(to_text(&stream[..12_345]));
    first.snapshot_out = Some(snap.clone());
    cmd_run(&first).unwrap();

    let mut second = base.clone();
    let resumed_snap = dir.path().join("resumed.json");
    second.input = Some(to_text(&stream[12_345..]));
    second.resume = Some(snap);
    second.snapshot_out = Some(resumed_snap.clone());
    let resumed: RunReport = serde_json::from_str(&cmd_run(&second).unwrap()).unwrap();

    let est = |r: &RunReport| r.queries.iter().map(|q| q.estimate).collect::<Vec<_>>();
    assert_eq!(est(&whole_report), est(&resumed));
    assert_eq!(whole_report.n_seen, resumed.n_seen);
    assert_eq!(whole_report.stored, resumed.stored);
    assert!(resumed.queries.iter().all(|q| q.true_rank.is_none()));
    assert_eq!(std::fs::read(whole_snap).unwrap(), std::fs::read(resumed_snap).unwrap());
}

#[test]
fn adversary_subcommand_emits_transcript() {
    let out = run_ok(&["adversary", "--depth", "5", "--trials", "30", "--seed", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["stream"].as_array().unwrap().len(), 31);
    assert!(v["objective"].as_f64().unwrap() > 0.0);
    assert!(v["query"].as_str().unwrap().contains('/'));
    let code = bin()
        .args(["adversary", "--depth", "5", "--trials", "10"])
        .output()
        .unwrap()
        .status
        .code();
    assert_eq!(code, Some(2));
}

#[test]
fn bench_matrix_of_one_matches_measure_error() {
    let spec = BenchSpec {
        gens: vec![GenKind::Uniform],
        eps_log2: vec![4],
        n: 5000,
        seeds: 3,
        seed: 7,
        delta_log2: None,
        tree: TreeParams::default(),
    };
    let rows = run_matrix(&spec, 2).unwrap();
    let stream = gen_stream(GenKind::Uniform, 5000, 7, TreeParams::default()).unwrap();
    let f = |s: u64| RelativeSketch::new(SketchConfig::new(Params::constant(4), s));
    let r = measure_error(&f, &stream, &log_spaced_ranks(5000), &seed_list(7, 3), 1.0 / 16.0).unwrap();
    assert_eq!(rows.len(), r.queries.len());
    for (row, q) in rows.iter().zip(&r.queries) {
        assert_eq!(row.true_rank, q.true_rank);
        assert_eq!(row.rms_rel_err, q.rms_rel_err);
        assert_eq!(row.peak_space, q.peak_space);
        assert!(row.space_ok);
    }
}

#[test]
fn highprob_mode_runs() {
    let out = run_ok(&["run", "-", "--mode", "highprob", "--delta", "1/2^8", "--eps", "1/2^3"]);
    let r: RunReport = serde_json::from_slice(&out).unwrap();
    assert_eq!(r.params.loglog_inv_delta, Some(3));
}
