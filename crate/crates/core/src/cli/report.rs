//! Report assembly and output files.

use std::fmt::Display;
use std::fs;
use std::io;
use std::path::{Path as FsPath, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::ExperimentConfig;
use crate::dynkin::Verdict;

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> &[&'static str] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    /// Appends a row; panics if the width differs from the header.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width differs from header"
        );
        self.rows.push(row);
    }

    /// Header line followed by one line per row, each newline-terminated.
    /// Cells containing commas or quotes are quoted.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }
}

/// Shortest round-trip text of a value, for CSV cells.
pub fn cell<T: Display>(v: T) -> String {
    v.to_string()
}

/// One verifier record: `{check, scenario, f, t, mean, stderr, replicas, verdict}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub scenario: String,
    pub f: String,
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub verdict: Verdict,
}

pub const CHECK_HEADER: [&str; 8] = [
    "check", "scenario", "f", "t", "mean", "stderr", "replicas", "verdict",
];

pub fn check_table(records: &[CheckRecord]) -> Table {
    let mut table = Table::new(&CHECK_HEADER);
    for r in records {
        table.push(vec![
            r.check.clone(),
            r.scenario.clone(),
            r.f.clone(),
            cell(r.t),
            cell(r.mean),
            cell(r.stderr),
            cell(r.replicas),
            r.verdict.as_str().to_owned(),
        ]);
    }
    table
}

/// Result of one experiment run, ready to be written.
#[derive(Debug, Clone)]
pub struct Report {
    /// `(file name, table)` pairs.
    pub tables: Vec<(String, Table)>,
    /// Experiment-specific results echoed into the summary.
    pub results: Value,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

impl Report {
    /// The structured summary: tool version, config hash, seed, materialized
    /// config, warnings, results and the overall verdict.
    pub fn summary(&self, cfg: &ExperimentConfig) -> Value {
        let mut warnings = cfg.warnings.clone();
        warnings.extend(self.warnings.iter().cloned());
        json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "experiment": cfg.experiment,
            "scenario": cfg.scenario,
            "master_seed": cfg.master_seed,
            "config_hash": cfg.hash(),
            "config": cfg,
            "outputs": self.tables.iter().map(|(name, _)| name.clone()).collect::<Vec<_>>(),
            "warnings": warnings,
            "results": self.results,
            "verdict": self.verdict,
        })
    }
}

/// Writes every table plus `summary.json` into `out_dir`, creating it if
/// needed. Returns the written paths.
pub fn write_outputs(
    report: &Report,
    cfg: &ExperimentConfig,
    out_dir: &FsPath,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, table) in &report.tables {
        let path = out_dir.join(name);
        fs::write(&path, table.to_csv())?;
        written.push(path);
    }
    let path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&report.summary(cfg)).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
