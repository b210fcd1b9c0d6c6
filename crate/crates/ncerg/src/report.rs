//! In-memory results and their serialization to the output directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::schema::{schema_json, table};
use crate::RunError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v:e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    /// Key into the published schema.
    pub file: &'static str,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: &'static str) -> Self {
        let _ = table(file);
        Self {
            file,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), table(self.file).columns.len(), "{}", self.file);
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub suite: &'static str,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub certificates: Vec<(String, Value)>,
    /// Largest empirical maximal-inequality constant measured, if any.
    pub empirical_c: Option<f64>,
}

impl SuiteOutcome {
    pub fn new(suite: &'static str) -> Self {
        Self {
            suite,
            checks: Vec::new(),
            tables: Vec::new(),
            certificates: Vec::new(),
            empirical_c: None,
        }
    }

    pub fn check(
        &mut self,
        name: &str,
        passed: bool,
        value: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) {
        self.checks.push(Check {
            suite: self.suite,
            name: name.to_string(),
            passed,
            value,
            threshold,
            detail: detail.into(),
        });
    }

    pub fn certificate(&mut self, name: &str, value: Value) {
        self.certificates.push((name.to_string(), value));
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub suites: Vec<SuiteOutcome>,
}

fn table_path(suite: &str, file: &str) -> String {
    format!("{suite}/{file}")
}

fn certificate_path(suite: &str, name: &str) -> String {
    format!("{suite}/certificates/{name}.json")
}

impl RunReport {
    pub fn empty(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            suites: Vec::new(),
        }
    }

    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.suites.iter().flat_map(|s| &s.checks)
    }

    pub fn passed(&self) -> bool {
        self.checks().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        let mut tables = Vec::new();
        let mut certificates = Vec::new();
        for s in &self.suites {
            tables.extend(s.tables.iter().map(|t| table_path(s.suite, t.file)));
            certificates.extend(
                s.certificates
                    .iter()
                    .map(|(n, _)| certificate_path(s.suite, n)),
            );
        }
        tables.push("summary.csv".to_string());
        json!({
            "experiment": self.experiment,
            "seed": self.seed,
            "passed": self.passed(),
            "checks": self.checks().collect::<Vec<_>>(),
            "tables": tables,
            "certificates": certificates,
        })
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

fn write_csv(path: &Path, file: &'static str, rows: &[Vec<Cell>]) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(table(file).header())
        .map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(Cell::to_string))
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Writes every table, certificate, `summary.csv`, `schema.json` and
/// `report.json` under `out`; returns the paths written.
pub fn emit_plot_data(report: &RunReport, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut written = Vec::new();
    for s in &report.suites {
        for t in &s.tables {
            let path = out.join(table_path(s.suite, t.file));
            write_csv(&path, t.file, &t.rows)?;
            written.push(path);
        }
        for (name, value) in &s.certificates {
            let path = out.join(certificate_path(s.suite, name));
            write_json(&path, value)?;
            written.push(path);
        }
    }
    let summary: Vec<Vec<Cell>> = report
        .checks()
        .map(|c| {
            vec![
                Cell::from(c.suite),
                Cell::Text(c.name.clone()),
                Cell::from(if c.passed { "true" } else { "false" }),
                Cell::Num(c.value),
                Cell::Num(c.threshold),
            ]
        })
        .collect();
    let path = out.join("summary.csv");
    write_csv(&path, "summary.csv", &summary)?;
    written.push(path);
    for (name, value) in [
        ("schema.json", schema_json()),
        ("report.json", report.to_json()),
    ] {
        let path = out.join(name);
        write_json(&path, &value)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let report = RunReport::empty("full", 0);
        emit_plot_data(&report, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(text, "suite,check,passed,value,threshold\n");
        let json: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(json["passed"], true);
        assert_eq!(json["tables"], json!(["summary.csv"]));
    }

    #[test]
    fn referenced_files_exist() {
        let dir = tempfile::tempdir().unwrap();
        let mut outcome = SuiteOutcome::new("local-avg");
        let mut t = Table::new("local_avg.csv");
        t.push(vec![1.0.into(), 0.5.into(), Cell::Empty]);
        outcome.tables.push(t);
        outcome.certificate("cauchy", json!({"cotrace": 0.0}));
        outcome.check("decreasing", true, 0.0, 0.0, "");
        let report = RunReport {
            experiment: "local-avg".into(),
            seed: 1,
            suites: vec![outcome],
        };
        emit_plot_data(&report, dir.path()).unwrap();
        let json = report.to_json();
        for key in ["tables", "certificates"] {
            for p in json[key].as_array().unwrap() {
                assert!(dir.path().join(p.as_str().unwrap()).exists(), "{p}");
            }
        }
        let text = fs::read_to_string(dir.path().join("local-avg/local_avg.csv")).unwrap();
        assert_eq!(text, "T,norm_p,analytic\n1e0,5e-1,\n");
    }
}
