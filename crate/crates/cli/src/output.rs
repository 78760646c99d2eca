//! Report rendering: canonical JSON with the resolved config, or CSV summary rows.

use lidtest_core::io::{round_float, to_canonical_json};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// One CSV row as ordered `(column, value)` pairs.
pub type Row = Vec<(String, Value)>;

pub struct Report {
    pub body: Value,
    pub rows: Vec<Row>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    report: &'a Value,
}

pub fn json(command: &str, cfg: &RunConfig, r: &Report) -> Result<String, CliError> {
    Ok(to_canonical_json(&Envelope { command, version: lidtest_core::VERSION, config: cfg, report: &r.body })?)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => round_float(x).to_string(),
            _ => n.to_string(),
        },
        v => v.to_string(),
    }
}

pub fn csv(rows: &[Row]) -> Result<String, CliError> {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    let io = |e: ::csv::Error| CliError::Io(e.to_string());
    if let Some(first) = rows.first() {
        w.write_record(first.iter().map(|(k, _)| k.as_str())).map_err(io)?;
    }
    for r in rows {
        w.write_record(r.iter().map(|(_, v)| cell(v))).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Builds a row from `column => value` pairs.
#[macro_export]
macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {
        vec![$(($k.to_string(), serde_json::json!($v))),*]
    };
}
