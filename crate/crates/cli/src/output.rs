//! Artifact serialization: JSON or flat CSV tables.

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Artifact { name: name.into(), contents }
    }
}

/// A single record is written as a JSON object, several as an array.
pub fn table<T: Serialize>(stem: &str, format: Format, rows: &[T]) -> Result<Artifact> {
    Ok(match format {
        Format::Json => {
            let text = if rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0])?
            } else {
                serde_json::to_string_pretty(rows)?
            };
            Artifact::new(format!("{stem}.json"), text + "\n")
        }
        Format::Csv => {
            let values: Vec<Value> = rows.iter().map(serde_json::to_value).collect::<serde_json::Result<_>>()?;
            Artifact::new(format!("{stem}.csv"), to_csv(&values))
        }
    })
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => cell(&Value::String(v.to_string())),
        other => other.to_string(),
    }
}

/// Header from the first record's keys, one line per record.
pub fn to_csv(rows: &[Value]) -> String {
    let Some(Value::Object(first)) = rows.first() else { return String::new() };
    let keys: Vec<&String> = first.keys().collect();
    let mut s = keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",") + "\n";
    for r in rows {
        let line: Vec<String> = keys.iter().map(|k| cell(r.get(k.as_str()).unwrap_or(&Value::Null))).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
