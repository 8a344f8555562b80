//! Report assembly, hashing and atomic file output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::LoadedConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Hash of the effective configuration, independent of key order and of
/// where outputs go.
pub fn config_hash(cfg: &LoadedConfig) -> String {
    let canonical = serde_json::to_string(&cfg.canonical()).expect("json");
    sha256_hex(canonical.as_bytes())
}

/// A table written as RFC-4180 CSV.
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Table {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }
}

/// Formats a float so that it parses back to the same value.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        x.to_string()
    }
}

/// Ten significant digits, for human-readable summaries.
pub fn short(x: f64) -> String {
    if x.is_finite() {
        format!("{}", format!("{x:.9e}").parse::<f64>().unwrap())
    } else {
        x.to_string()
    }
}

/// Output of one command before it is written.
pub struct Outcome {
    pub pass: bool,
    pub summary: Vec<String>,
    pub result: Value,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn new(pass: bool, summary: Vec<String>, result: Value) -> Self {
        Outcome {
            pass,
            summary,
            result,
            tables: Vec::new(),
        }
    }
}

fn input_hashes(cfg: &LoadedConfig) -> BTreeMap<String, String> {
    cfg.referenced_files()
        .into_iter()
        .filter_map(|f| {
            let bytes = std::fs::read(cfg.resolve(&f)).ok()?;
            Some((f, sha256_hex(&bytes)))
        })
        .collect()
}

/// The report document. Keys are emitted in sorted order.
pub fn report_document(
    command: &str,
    cfg: &LoadedConfig,
    outcome: &Outcome,
    error: Option<&str>,
) -> Value {
    let mut outputs: Vec<String> = outcome.tables.iter().map(|t| t.name.clone()).collect();
    outputs.sort();
    json!({
        "command": command,
        "version": VERSION,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "inputs": input_hashes(cfg),
        "pass": outcome.pass,
        "summary": outcome.summary,
        "result": outcome.result,
        "outputs": outputs,
        "error": error,
    })
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::input(format!("cannot write {}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(fail)?;
    let name = path
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("output");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(fail)
}

/// Writes every table and the report; returns the report path.
pub fn emit(
    command: &str,
    cfg: &LoadedConfig,
    outcome: &Outcome,
    error: Option<&str>,
) -> Result<std::path::PathBuf, CliError> {
    for t in &outcome.tables {
        write_atomic(&cfg.out.join(&t.name), &t.to_csv())?;
    }
    let doc = report_document(command, cfg, outcome, error);
    let mut text = serde_json::to_string_pretty(&doc).expect("json");
    text.push('\n');
    let path = cfg.out.join(format!("{}.json", command.replace('-', "_")));
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
