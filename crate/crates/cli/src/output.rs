//! Tabular output in CSV, JSON or JSON-lines with a reproducibility header.

use std::io::Write;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

pub const CSV_SCHEMA: &str = "cylmatter-csv/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

/// Run parameters echoed at the top of every output.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: &'static str,
    pub fields: Vec<(&'static str, Value)>,
}

impl Header {
    pub fn new(command: &'static str) -> Self {
        Self { command, fields: Vec::new() }
    }

    pub fn with(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.fields.push((key, value.into()));
        self
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema".into(), json!(CSV_SCHEMA));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("command".into(), json!(self.command));
        for (k, v) in &self.fields {
            m.insert((*k).into(), v.clone());
        }
        Value::Object(m)
    }

    fn to_comment(&self) -> String {
        let mut s = format!("# {CSV_SCHEMA} cylmatter {} command={}", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.fields {
            let text = match v {
                Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!(" {k}={text}"));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Header,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// Extra fields reported after the rows (JSON formats) or as trailing comments (CSV).
    pub summary: Vec<(&'static str, Value)>,
}

impl Table {
    pub fn new(header: Header, columns: Vec<&'static str>) -> Self {
        Self { header, columns, rows: Vec::new(), summary: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summary(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.summary.push((key, value.into()));
        self
    }

    fn row_object(&self, row: &[Value]) -> Value {
        Value::Object(self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.clone())).collect())
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.header.to_comment())?;
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
                for (k, v) in &self.summary {
                    writeln!(out, "# {k}={}", compact(v))?;
                }
            }
            Format::Json => {
                let mut m = Map::new();
                m.insert("header".into(), self.header.to_json());
                m.insert("rows".into(), Value::Array(self.rows.iter().map(|r| self.row_object(r)).collect()));
                for (k, v) in &self.summary {
                    m.insert((*k).into(), v.clone());
                }
                writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(m)).unwrap_or_default())?;
            }
            Format::Jsonl => {
                writeln!(out, "{}", json!({ "header": self.header.to_json() }))?;
                for row in &self.rows {
                    writeln!(out, "{}", self.row_object(row))?;
                }
                if !self.summary.is_empty() {
                    let m: Map<String, Value> = self.summary.iter().map(|(k, v)| ((*k).to_string(), v.clone())).collect();
                    writeln!(out, "{}", json!({ "summary": m }))?;
                }
            }
        }
        Ok(())
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains(',') || s.contains('"') => format!("\"{}\"", s.replace('"', "\"\"")),
        other => compact(other),
    }
}
