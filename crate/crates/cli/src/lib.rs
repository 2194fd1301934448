//! Configuration-driven experiment runner.
//!
//! Each experiment kind reads a TOML file, runs one family of numerical checks
//! and writes a JSON summary plus CSV tables. Exit codes: 0 when every check
//! passes, 2 when a property fails, 1 on errors.

pub mod config;
pub mod experiments;
pub mod report;

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde_json::Value;

use config::{ExperimentKind, LoadedConfig};
use report::{Outcome, Provenance};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_PROPERTY: i32 = 2;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// When set, the config must declare this kind.
    pub kind: Option<ExperimentKind>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub name: String,
    pub summary: Value,
    pub outcome: Outcome,
    pub written: Vec<PathBuf>,
}

impl RunResult {
    pub fn exit_code(&self) -> i32 {
        if self.outcome.pass() {
            EXIT_PASS
        } else {
            EXIT_PROPERTY
        }
    }
}

/// Runs the experiment in `path` and writes its outputs under `opts.out`.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunResult> {
    let loaded = config::load(path)?;
    run_loaded(loaded, opts)
}

pub fn run_loaded(loaded: LoadedConfig, opts: &RunOptions) -> Result<RunResult> {
    let LoadedConfig {
        mut config,
        sha256,
        stem,
    } = loaded;
    if let Some(k) = opts.kind {
        if k != config.kind {
            bail!(
                "config declares kind {}, not {}",
                config.kind.as_str(),
                k.as_str()
            );
        }
    }
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    let name = config.name.clone().unwrap_or(stem);
    let outcome = experiments::run(&config)?;
    let summary = report::summary(
        &outcome,
        &Provenance {
            kind: config.kind.as_str(),
            name: &name,
            config_sha256: &sha256,
            seed: config.seed,
        },
    )?;
    let written = report::write_outputs(&opts.out, &name, &summary, &outcome.tables)?;
    Ok(RunResult {
        name,
        summary,
        outcome,
        written,
    })
}

/// Static checks on a config that need no numerics; returns the problems found.
pub fn validate_file(path: &Path) -> Result<Vec<String>> {
    let loaded = config::load(path)?;
    Ok(config::diagnostics(&loaded.config))
}
