//! Report documents and their JSON and CSV encodings.

use relquant_core::sketch::SpaceTrace;
use serde::{Deserialize, Serialize};

use crate::config::ParamsInfo;
use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub key: String,
    /// Requested rank, for rank grids.
    pub target_rank: Option<u64>,
    pub estimate: u64,
    /// Exact rank over the ingested input; absent after a resume.
    pub true_rank: Option<u64>,
    pub rel_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub params: ParamsInfo,
    pub seed: u64,
    pub n_seen: u64,
    pub ingested: u64,
    pub stored: usize,
    pub peak_space: usize,
    pub scales: usize,
    pub steps: u64,
    pub queries: Vec<QueryRow>,
}

#[derive(Serialize)]
struct TraceCsvRow {
    step: u64,
    level: usize,
    s_hat: usize,
    phi_level: String,
    phi_child: String,
    accumulator: f64,
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::config(format!("csv encoding failed: {e}"))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

pub fn render<T: Serialize, R: Serialize>(doc: &T, rows: &[R], format: Format) -> CliResult<String> {
    match format {
        Format::Json => to_json(doc),
        Format::Csv => rows_to_csv(rows),
    }
}

/// Trace as CSV with columns `step,level,s_hat,phi_level,phi_child,accumulator`.
pub fn trace_csv(trace: &SpaceTrace) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["step", "level", "s_hat", "phi_level", "phi_child", "accumulator"])
        .map_err(csv_err)?;
    for r in &trace.rows {
        w.serialize(TraceCsvRow {
            step: r.step,
            level: r.level,
            s_hat: r.s_hat,
            phi_level: r.phi_level.to_string(),
            phi_child: r.phi_child.to_string(),
            accumulator: r.accumulator,
        })
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}
