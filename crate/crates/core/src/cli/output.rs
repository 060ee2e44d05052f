//! Rendering of command results as text, CSV or a JSON envelope.

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::ElError;

/// Version of the JSON envelope layout in `schemas/report.schema.json`.
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// A rectangular result, rendered for `text` and `csv` output.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub title: Vec<String>,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Clone, Debug)]
pub enum Cell {
    Str(String),
    Num(f64),
    Int(usize),
    Bool(bool),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Num(v) if v.is_finite() => {
                if *v != 0.0 && (v.abs() < 1e-4 || v.abs() >= 1e7) {
                    format!("{v:.4e}")
                } else {
                    format!("{v:.6}")
                }
            }
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => "-".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Empty => String::new(),
            other => other.text(),
        }
    }
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table { title: Vec::new(), headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &cells {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for t in &self.title {
            out.push_str(t);
            out.push('\n');
        }
        let left: Vec<bool> = (0..self.headers.len())
            .map(|j| self.rows.first().is_some_and(|r| matches!(r[j], Cell::Str(_))))
            .collect();
        let line = |vals: Vec<&str>| {
            let mut s = vals
                .iter()
                .zip(widths.iter().zip(&left))
                .map(|(v, (w, l))| if *l { format!("{v:<w$}", w = *w) } else { format!("{v:>w$}", w = *w) })
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string();
            s.push('\n');
            s
        };
        out.push_str(&line(self.headers.clone()));
        for r in &cells {
            out.push_str(&line(r.iter().map(String::as_str).collect()));
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }
}

/// Lower-case hex SHA-256 of the canonical (key-sorted) JSON of `config`.
pub fn config_hash(command: &str, config: &Value) -> String {
    let mut canonical = String::new();
    write_canonical(&json!({ "command": command, "config": config }), &mut canonical);
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

// Sorts object keys explicitly: serde_json's map keeps insertion order when
// another crate in the build turns on its `preserve_order` feature.
fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&m[k], out);
            }
            out.push('}');
        }
        Value::Array(xs) => {
            out.push('[');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(x, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

pub fn envelope(command: &str, config: &Value, results: Value, wall_time: f64) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "status": "ok",
        "command": command,
        "config": config,
        "config_hash": config_hash(command, config),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": wall_time,
        "results": results,
    })
}

pub fn error_envelope(command: &str, err: &ElError, exit_code: i32) -> Value {
    let mut detail = json!({ "kind": err.kind(), "message": err.to_string(), "exit_code": exit_code });
    if let ElError::ParseError { row, col, .. } = err {
        detail["row"] = json!(row);
        detail["col"] = json!(col);
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "status": "error",
        "command": command,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "error": detail,
    })
}
