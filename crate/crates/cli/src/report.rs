//! JSON summaries and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One pass/fail property with the number it was decided on.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= bound,
            value,
            bound,
        }
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value >= bound,
            value,
            bound,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            bound: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }
}

/// Shortest round-trip text of a float.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub report: Value,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub struct Provenance<'a> {
    pub kind: &'a str,
    pub name: &'a str,
    pub config_sha256: &'a str,
    pub seed: u64,
}

pub fn summary(outcome: &Outcome, p: &Provenance) -> Result<Value> {
    let tables: Vec<Value> = outcome
        .tables
        .iter()
        .map(|t| json!({ "name": t.name, "rows": t.rows.len() }))
        .collect();
    Ok(json!({
        "tool": { "name": "anisolab", "version": env!("CARGO_PKG_VERSION") },
        "kind": p.kind,
        "name": p.name,
        "config_sha256": p.config_sha256,
        "seed": p.seed,
        "pass": outcome.pass(),
        "checks": serde_json::to_value(&outcome.checks)?,
        "report": outcome.report,
        "tables": tables,
    }))
}

/// Writes `<name>.json` and `<name>_<table>.csv` into `dir`; returns the paths written.
pub fn write_outputs(
    dir: &Path,
    name: &str,
    summary: &Value,
    tables: &[Table],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let json_path = dir.join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(&json_path, text).with_context(|| format!("writing {}", json_path.display()))?;
    written.push(json_path);
    for t in tables {
        let path = dir.join(format!("{name}_{}.csv", t.name));
        fs::write(&path, t.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}
