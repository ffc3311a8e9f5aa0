use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use relquant::bench::{thread_count, BenchSpec};
use relquant::commands::{cmd_adversary, cmd_bench, cmd_gen, cmd_run, AdversaryAlgo, RunArgs};
use relquant::config::{make_params, parse_delta, parse_eps, parse_grid, ModeArg};
use relquant::report::Format;
use relquant::{CliError, CliResult};
use relquant_core::eval::generators::{GenKind, TreeParams};

#[derive(Parser)]
#[command(name = "relquant", version, about = "Relative-error quantile sketch tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated stream as newline-delimited keys.
    Gen {
        #[arg(long, default_value = "uniform")]
        gen: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tree instance: keys per batch.
        #[arg(long)]
        batch: Option<usize>,
        /// Tree instance: pauses per batch.
        #[arg(long)]
        pauses: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ingest a key stream and answer a query grid.
    Run {
        /// Key file; `-` or absent reads standard input.
        input: Option<PathBuf>,
        #[arg(long, default_value = "1/2^6")]
        eps: String,
        #[arg(long, value_enum, default_value = "const")]
        mode: ModeArg,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `log`, `keys:a,b,..` or `ranks:r1,r2,..`.
        #[arg(long, default_value = "log")]
        grid: String,
        /// Write the per-step allocator trace as CSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Resume from a snapshot; its parameters and seed win.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Write a snapshot after ingestion.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure error and space over generators, accuracies and seeds.
    Bench {
        /// Comma-separated generator names.
        #[arg(long, default_value = "uniform,sorted,reverse,tree_instance")]
        gen: String,
        /// Comma-separated accuracies.
        #[arg(long, default_value = "1/2^4,1/2^5")]
        eps: String,
        #[arg(long, value_enum, default_value = "const")]
        mode: ModeArg,
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 30)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the adaptive hard stream against an algorithm.
    Adversary {
        #[arg(long, default_value_t = 8)]
        depth: u32,
        /// `keep-smallest[:s]` or `sketch[:1/2^m]`.
        #[arg(long, default_value = "keep-smallest")]
        algo: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn read_input(input: Option<&PathBuf>) -> CliResult<String> {
    match input {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::io("<stdin>", e))?;
            Ok(s)
        }
    }
}

fn gen_kind(s: &str) -> CliResult<GenKind> {
    GenKind::parse(s.trim()).ok_or_else(|| CliError::config(format!("unknown generator {s:?}")))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Gen {
            gen,
            n,
            seed,
            batch,
            pauses,
            out,
        } => {
            let text = cmd_gen(gen_kind(&gen)?, n, seed, TreeParams { batch, pauses })?;
            emit(out.as_ref(), &text)
        }
        Command::Run {
            input,
            eps,
            mode,
            delta,
            seed,
            grid,
            trace,
            resume,
            snapshot,
            format,
            out,
        } => {
            let params = make_params(parse_eps(&eps)?, mode, delta.as_deref())?;
            let args = RunArgs {
                params,
                seed,
                grid: parse_grid(&grid)?,
                input: Some(read_input(input.as_ref())?),
                resume,
                snapshot_out: snapshot,
                trace_out: trace,
                format,
            };
            emit(out.as_ref(), &cmd_run(&args)?)
        }
        Command::Bench {
            gen,
            eps,
            mode,
            delta,
            n,
            seeds,
            seed,
            format,
            out,
        } => {
            let delta_log2 = match (mode, delta.as_deref()) {
                (ModeArg::Const, None) => None,
                (ModeArg::Const, Some(_)) => return Err(CliError::config("--delta only applies to --mode highprob")),
                (ModeArg::Highprob, Some(d)) => Some(parse_delta(d)?),
                (ModeArg::Highprob, None) => return Err(CliError::config("--mode highprob needs --delta")),
            };
            let spec = BenchSpec {
                gens: gen.split(',').map(gen_kind).collect::<CliResult<_>>()?,
                eps_log2: eps.split(',').map(parse_eps).collect::<CliResult<_>>()?,
                n,
                seeds,
                seed,
                delta_log2,
                tree: TreeParams::default(),
            };
            emit(out.as_ref(), &cmd_bench(&spec, thread_count(), format)?)
        }
        Command::Adversary {
            depth,
            algo,
            trials,
            seed,
            out,
        } => {
            let algo = AdversaryAlgo::parse(&algo, depth)?;
            emit(out.as_ref(), &cmd_adversary(depth, &algo, trials, seed)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relquant: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
