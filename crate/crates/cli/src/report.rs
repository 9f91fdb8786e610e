//! Result tables and the CSV/JSON artifacts written for every run.
//!
//! CSV line 1 is `# generated <timestamp>`, the only field that changes between
//! identical runs. Reals are printed as `{:.16e}` (17 significant digits).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::convergence::ConvergenceReport;
use crate::error::RunResult;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Flag(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Flag(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Real(v) => Some(v),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

/// Rows under a fixed header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    fn index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column; non-numeric cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    /// Header and rows, without the timestamp line.
    pub fn csv_body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// Where and how a report was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub build_hash: String,
    pub rng: String,
    pub threads: usize,
}

impl Environment {
    pub fn current(threads: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            build_hash: env!("HYPERADAMS_BUILD_HASH").into(),
            rng: crate::experiments::RNG_NAME.into(),
            threads,
        }
    }
}

/// Everything the JSON artifact holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub generated: String,
    /// canonical config; reparses to the config that produced the report
    pub config: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: BTreeMap<String, Value>,
    pub diagnostics: Vec<String>,
    pub convergence: Option<ConvergenceReport>,
    pub environment: Environment,
    pub wall_time_seconds: f64,
}

impl ExperimentReport {
    pub fn table(&self) -> Table {
        Table { columns: self.columns.clone(), rows: self.rows.clone() }
    }
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> RunResult<PathBuf> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).map_err(|e| e.error)?;
    Ok(target)
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`, each via rename of a temp file.
pub fn write_report(dir: &Path, stem: &str, report: &ExperimentReport) -> RunResult<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv = format!("# generated {}\n{}", report.generated, report.table().csv_body());
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::from)? + "\n";
    let csv_path = write_atomic(dir, &format!("{stem}.csv"), &csv)?;
    let json_path = write_atomic(dir, &format!("{stem}.json"), &json)?;
    Ok((csv_path, json_path))
}

/// CSV text with the timestamp line removed.
pub fn strip_timestamp(csv: &str) -> &str {
    match csv.strip_prefix("# generated ") {
        Some(rest) => rest.split_once('\n').map_or("", |(_, body)| body),
        None => csv,
    }
}
