use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dperm_core::analysis::ResultRow;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, Result};

fn metric_base(metric: &str) -> &str {
    metric.split('[').next().unwrap_or(metric)
}

/// Deterministic row order: experiment, mechanism, problem, metric name
/// (without its bracketed parameter), then the numeric columns. The sort is
/// stable, so ties keep generation order, which is increasing in the
/// bracketed parameter.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.experiment
            .cmp(&b.experiment)
            .then_with(|| a.mechanism.cmp(&b.mechanism))
            .then_with(|| a.problem.cmp(&b.problem))
            .then_with(|| metric_base(&a.metric).cmp(metric_base(&b.metric)))
            .then_with(|| a.n.cmp(&b.n))
            .then_with(|| a.epsilon.total_cmp(&b.epsilon))
            .then_with(|| a.delta.total_cmp(&b.delta))
    });
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_rows(path: &Path, rows: &[ResultRow], format: Format) -> Result<()> {
    ensure_parent(path)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
            for row in rows {
                w.serialize(row).map_err(|e| write_err(path, e))?;
            }
            w.flush().map_err(|e| write_err(path, e))
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(rows).map_err(|e| write_err(path, e))?;
            std::fs::write(path, text + "\n").map_err(|e| write_err(path, e))
        }
    }
}

/// Provenance written next to the results.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    /// The run config re-serialized as TOML; it parses back to the same config.
    pub config: String,
    pub results: &'a Path,
    pub rows: usize,
    pub failed: usize,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

pub fn manifest_path(results: &Path) -> PathBuf {
    let mut name = results.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    results.with_file_name(name)
}

pub fn write_manifest(path: &Path, manifest: &Manifest<'_>) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| write_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| write_err(path, e))
}

pub fn manifest<'a>(cfg: &RunConfig, results: &'a Path, rows: &[ResultRow], wall: f64) -> Manifest<'a> {
    Manifest {
        tool: "dperm",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.to_toml(),
        results,
        rows: rows.len(),
        failed: rows.iter().filter(|r| !r.pass).count(),
        threads: rayon::current_num_threads(),
        wall_time_seconds: wall,
    }
}

/// Per-experiment tallies of a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    pub rows: usize,
    pub passed: usize,
    pub failed: usize,
    /// Smallest finite `bound - value` among the rows.
    pub worst_slack: Option<f64>,
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| CliError::Results(e.to_string()))
}

pub fn tally(rows: &[ResultRow]) -> BTreeMap<String, Tally> {
    let mut out: BTreeMap<String, Tally> = BTreeMap::new();
    for row in rows {
        let t = out.entry(row.experiment.clone()).or_insert(Tally {
            rows: 0,
            passed: 0,
            failed: 0,
            worst_slack: None,
        });
        t.rows += 1;
        if row.pass {
            t.passed += 1;
        } else {
            t.failed += 1;
        }
        let slack = row.slack();
        if slack.is_finite() {
            t.worst_slack = Some(t.worst_slack.map_or(slack, |w| w.min(slack)));
        }
    }
    out
}

pub fn render_summary(rows: &[ResultRow]) -> String {
    if rows.is_empty() {
        return "0 rows\n".into();
    }
    let tallies = tally(rows);
    let width = tallies.keys().map(|k| k.len()).max().unwrap_or(0).max("experiment".len());
    let mut out = format!("{:<width$}  {:>6}  {:>6}  {:>6}  worst_slack\n", "experiment", "rows", "pass", "fail");
    for (name, t) in &tallies {
        let slack = t.worst_slack.map_or("-".to_string(), |s| format!("{s:.6e}"));
        out.push_str(&format!("{name:<width$}  {:>6}  {:>6}  {:>6}  {slack}\n", t.rows, t.passed, t.failed));
    }
    out.push_str(&format!("{} rows\n", rows.len()));
    out
}
