//! Newline-delimited key files: decimal integers or `p/q` labels, never
//! mixed.

use std::fmt::Display;
use std::io::Write;

use relquant_core::eval::Label;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    Int,
    Label,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Keys {
    Int(Vec<i128>),
    Label(Vec<Label>),
}

impl Keys {
    pub fn len(&self) -> usize {
        match self {
            Keys::Int(v) => v.len(),
            Keys::Label(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> Option<KeyKind> {
        match self {
            Keys::Int(v) if !v.is_empty() => Some(KeyKind::Int),
            Keys::Label(v) if !v.is_empty() => Some(KeyKind::Label),
            _ => None,
        }
    }
}

pub fn parse_int(s: &str) -> CliResult<i128> {
    s.parse()
        .map_err(|_| CliError::config(format!("not an integer key: {s:?}")))
}

pub fn parse_label(s: &str) -> CliResult<Label> {
    s.parse()
        .map_err(|_| CliError::config(format!("not a p/q key: {s:?}")))
}

/// Parses a key file. Blank lines are skipped. The first key fixes the
/// kind; a key of the other kind is an error. An empty file parses as an
/// empty integer stream.
pub fn parse_keys(text: &str) -> CliResult<Keys> {
    let mut kind = None;
    let mut ints = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let here = if t.contains('/') { KeyKind::Label } else { KeyKind::Int };
        match kind {
            None => kind = Some(here),
            Some(k) if k != here => {
                return Err(CliError::config(format!(
                    "line {}: mixed integer and p/q keys",
                    lineno + 1
                )))
            }
            _ => {}
        }
        match here {
            KeyKind::Int => ints.push(parse_int(t)?),
            KeyKind::Label => labels.push(parse_label(t)?),
        }
    }
    Ok(match kind {
        Some(KeyKind::Label) => Keys::Label(labels),
        _ => Keys::Int(ints),
    })
}

pub fn write_keys<K: Display, W: Write>(out: &mut W, keys: &[K]) -> std::io::Result<()> {
    for k in keys {
        writeln!(out, "{k}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_kinds() {
        assert_eq!(parse_keys("3\n\n-1\n").unwrap(), Keys::Int(vec![3, -1]));
        let l = parse_keys("1/2\n3/4\n").unwrap();
        assert_eq!(l.kind(), Some(KeyKind::Label));
        assert!(matches!(parse_keys("1\n1/2\n"), Err(CliError::Config(_))));
        assert!(parse_keys("1/0\n").is_err());
        assert!(parse_keys("x\n").is_err());
        assert_eq!(parse_keys("").unwrap(), Keys::Int(vec![]));
    }
}
