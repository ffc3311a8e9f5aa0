//! Parsing of accuracy parameters and query grids.

use relquant_core::{Mode, Params};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Parses `eps` given as `1/2^m`, `1/N` with `N` a power of two, or `1`.
/// Returns `m`.
pub fn parse_eps(s: &str) -> CliResult<u32> {
    let bad = || CliError::config(format!("eps must look like 1/2^m, got {s:?}"));
    let t = s.trim();
    if t == "1" {
        return Ok(0);
    }
    let rest = t.strip_prefix("1/").ok_or_else(bad)?;
    let m = if let Some(exp) = rest.strip_prefix("2^") {
        exp.parse::<u32>().map_err(|_| bad())?
    } else {
        let n: u64 = rest.parse().map_err(|_| bad())?;
        if n == 0 || !n.is_power_of_two() {
            return Err(bad());
        }
        n.trailing_zeros()
    };
    if m > 30 {
        return Err(CliError::config("eps below 2^-30 is not supported"));
    }
    Ok(m)
}

/// Parses `delta` in `(0, 0.5]`, as `1/2^m` or a decimal, and returns
/// `ceil(log2(1/delta))`.
pub fn parse_delta(s: &str) -> CliResult<u32> {
    let t = s.trim();
    if let Some(exp) = t.strip_prefix("1/2^") {
        let m: u32 = exp
            .parse()
            .map_err(|_| CliError::config(format!("bad delta {s:?}")))?;
        if m == 0 {
            return Err(CliError::config("delta must be at most 0.5"));
        }
        return Ok(m);
    }
    let d: f64 = t
        .parse()
        .map_err(|_| CliError::config(format!("bad delta {s:?}")))?;
    if !(d > 0.0 && d <= 0.5) {
        return Err(CliError::config("delta must lie in (0, 0.5]"));
    }
    Ok((1.0 / d).log2().ceil() as u32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Const,
    Highprob,
}

pub fn make_params(eps_log2: u32, mode: ModeArg, delta: Option<&str>) -> CliResult<Params> {
    match mode {
        ModeArg::Const => {
            if delta.is_some() {
                return Err(CliError::config("--delta only applies to --mode highprob"));
            }
            Ok(Params::constant(eps_log2))
        }
        ModeArg::Highprob => {
            let d = delta.ok_or_else(|| CliError::config("--mode highprob needs --delta"))?;
            Ok(Params::high_prob(eps_log2, parse_delta(d)?))
        }
    }
}

/// Describes the parameters for reports.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ParamsInfo {
    pub eps: String,
    pub eps_log2: u32,
    pub mode: ModeArg,
    pub loglog_inv_delta: Option<u32>,
}

impl From<&Params> for ParamsInfo {
    fn from(p: &Params) -> Self {
        let (mode, q) = match p.mode {
            Mode::Constant => (ModeArg::Const, None),
            Mode::HighProb { q } => (ModeArg::Highprob, Some(q)),
        };
        ParamsInfo {
            eps: format!("1/2^{}", p.eps_log2),
            eps_log2: p.eps_log2,
            mode,
            loglog_inv_delta: q,
        }
    }
}

/// Query grid: explicit keys, explicit target ranks, or log-spaced ranks.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Keys(Vec<String>),
    Ranks(Vec<u64>),
    Log,
}

pub fn parse_grid(s: &str) -> CliResult<Grid> {
    let t = s.trim();
    if t == "log" {
        return Ok(Grid::Log);
    }
    if let Some(rest) = t.strip_prefix("keys:") {
        return Ok(Grid::Keys(
            rest.split(',')
                .map(|k| k.trim().to_string())
                .filter(|k| !k.is_empty())
                .collect(),
        ));
    }
    if let Some(rest) = t.strip_prefix("ranks:") {
        return rest
            .split(',')
            .filter(|r| !r.trim().is_empty())
            .map(|r| {
                r.trim()
                    .parse()
                    .map_err(|_| CliError::config(format!("bad rank {r:?}")))
            })
            .collect::<CliResult<Vec<u64>>>()
            .map(Grid::Ranks);
    }
    Err(CliError::config(format!(
        "grid must be `log`, `keys:a,b,..` or `ranks:r1,r2,..`, got {s:?}"
    )))
}
