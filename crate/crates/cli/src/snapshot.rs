//! Sketch snapshots: a JSON document holding the whole sketch state,
//! enough to resume ingestion with identical results.

use std::path::Path;

use relquant_core::RelativeSketch;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::keys::KeyKind;

pub const FORMAT: &str = "relquant-snapshot";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct Snapshot<K> {
    pub format: String,
    pub version: u32,
    pub key_kind: KeyKind,
    pub sketch: RelativeSketch<K>,
}

/// Header fields, read before the key kind is known.
#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
    key_kind: KeyKind,
}

pub fn write<K: Serialize>(path: &Path, kind: KeyKind, sketch: &RelativeSketch<K>) -> CliResult<()> {
    #[derive(Serialize)]
    struct Out<'a, K> {
        format: &'static str,
        version: u32,
        key_kind: KeyKind,
        sketch: &'a RelativeSketch<K>,
    }
    let doc = Out {
        format: FORMAT,
        version: VERSION,
        key_kind: kind,
        sketch,
    };
    let text = serde_json::to_string(&doc).map_err(|e| CliError::config(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads the header of a snapshot file and returns its text and key kind.
pub fn peek(path: &Path) -> CliResult<(String, KeyKind)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let h: Header = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: not a snapshot: {e}", path.display())))?;
    if h.format != FORMAT || h.version != VERSION {
        return Err(CliError::config(format!(
            "{}: unsupported snapshot {} v{}",
            path.display(),
            h.format,
            h.version
        )));
    }
    Ok((text, h.key_kind))
}

pub fn parse<K: DeserializeOwned>(text: &str) -> CliResult<RelativeSketch<K>> {
    let s: Snapshot<K> = serde_json::from_str(text).map_err(|e| CliError::config(format!("bad snapshot: {e}")))?;
    Ok(s.sketch)
}
