//! Report files: a header block (tool version, config echo, input
//! digests) followed by a table, as commented CSV or as NDJSON.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::args::OutputFormat;

pub const TOOL: &str = concat!("logmorph ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct Input {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Input {
    pub fn of_bytes(path: &Path, bytes: &[u8]) -> Input {
        Input {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Header {
    pub command: &'static str,
    pub config: Vec<(String, String)>,
    pub inputs: Vec<Input>,
}

impl Header {
    pub fn new(command: &'static str) -> Header {
        Header {
            command,
            config: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    fn comment_lines(&self, summary: &[(String, String)]) -> String {
        let mut out = format!("# {TOOL}\n# command: {}\n", self.command);
        for (k, v) in &self.config {
            out.push_str(&format!("# config {k} = {v}\n"));
        }
        for i in &self.inputs {
            out.push_str(&format!("# input {} sha256:{} bytes:{}\n", i.path, i.sha256, i.bytes));
        }
        for (k, v) in summary {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out
    }

    pub fn to_json(&self, summary: &[(String, String)]) -> Value {
        let config: Map<String, Value> = self.config.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|i| json!({"path": i.path, "sha256": i.sha256, "bytes": i.bytes}))
            .collect();
        let summary: Map<String, Value> = summary.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "tool": TOOL,
            "command": self.command,
            "config": config,
            "inputs": inputs,
            "summary": summary,
        })
    }
}

pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Table {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn render_csv(header: &Header, table: &Table) -> Result<Vec<u8>> {
    let mut out = header.comment_lines(&table.summary).into_bytes();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text))?;
    }
    out.extend(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?);
    Ok(out)
}

fn render_ndjson(header: &Header, table: &Table) -> Result<Vec<u8>> {
    let mut out = serde_json::to_string(&json!({"header": header.to_json(&table.summary)}))?;
    out.push('\n');
    for row in &table.rows {
        // Keys in column order rather than sorted.
        out.push('{');
        for (i, (col, v)) in table.columns.iter().zip(row).enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&serde_json::to_string(col)?);
            out.push(':');
            out.push_str(&serde_json::to_string(v)?);
        }
        out.push_str("}\n");
    }
    Ok(out.into_bytes())
}

pub struct Writer {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl Writer {
    pub fn new(dir: &Path, format: OutputFormat) -> Writer {
        Writer {
            dir: dir.to_path_buf(),
            format,
        }
    }

    pub fn table(&self, header: &Header, table: &Table) -> Result<PathBuf> {
        let (ext, bytes) = match self.format {
            OutputFormat::Csv => ("csv", render_csv(header, table)?),
            OutputFormat::Ndjson => ("ndjson", render_ndjson(header, table)?),
        };
        self.raw(&format!("{}.{ext}", table.name), &bytes)
    }

    /// A plain-text report: header as `#` comments, then `body`.
    pub fn text(&self, name: &str, header: &Header, summary: &[(String, String)], body: &str) -> Result<PathBuf> {
        let mut text = header.comment_lines(summary);
        text.push_str(body);
        self.raw(name, text.as_bytes())
    }

    pub fn json(
        &self,
        name: &str,
        header: &Header,
        summary: &[(String, String)],
        key: &str,
        body: Value,
    ) -> Result<PathBuf> {
        let mut doc = Map::new();
        doc.insert("header".into(), header.to_json(summary));
        doc.insert(key.into(), body);
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
        text.push('\n');
        self.raw(name, text.as_bytes())
    }

    pub fn raw(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("cannot create output directory {}", self.dir.display()))?;
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
