//! Deterministic CSV and JSON writers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.into()
    }
}

/// Header row plus one line per row, LF endings, floats as shortest round-trip decimals.
pub fn csv_string(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in rows {
        let line = row
            .iter()
            .map(|c| match c {
                Cell::Float(v) => format!("{v:?}"),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => quote(s),
                Cell::Empty => String::new(),
            })
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(out, "{line}");
    }
    out
}

/// Pretty JSON with keys in sorted order and a trailing newline.
pub fn json_string<T: Serialize>(doc: &T) -> CliResult<String> {
    // serde_json::Value keeps object keys in a BTreeMap
    let v = serde_json::to_value(doc).map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text.as_bytes()).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> CliResult<()> {
    if let Some(bad) = rows.iter().find(|r| r.len() != header.len()) {
        return Err(CliError::Usage(format!("row with {} cells under a {}-column header", bad.len(), header.len())));
    }
    write(path, &csv_string(header, rows))
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> CliResult<()> {
    write(path, &json_string(doc)?)
}
