//! Result tables, verification checks, and their on-disk forms.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Floats use 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File name, including the `.csv` extension.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Values of a numeric column.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        self.rows
            .iter()
            .map(|r| match &r[k] {
                Cell::Float(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                _ => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = ">")]
    Greater,
    #[serde(rename = "==")]
    Equal,
    #[serde(rename = "holds")]
    Holds,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub relation: Relation,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn less(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            threshold: Some(threshold),
            relation: Relation::Less,
            passed: measured < threshold,
            detail: String::new(),
        }
    }

    pub fn greater(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            threshold: Some(threshold),
            relation: Relation::Greater,
            passed: measured > threshold,
            detail: String::new(),
        }
    }

    pub fn equal(name: impl Into<String>, measured: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            measured: Some(measured),
            threshold: Some(expected),
            relation: Relation::Equal,
            passed: measured == expected,
            detail: String::new(),
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured: None,
            threshold: None,
            relation: Relation::Holds,
            passed,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// Everything one experiment produces, held in memory until written.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// JSON documents keyed by file name.
    pub documents: Vec<(String, serde_json::Value)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn merge(&mut self, other: Outcome) {
        self.tables.extend(other.tables);
        self.documents.extend(other.documents);
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    command: &'a str,
    experiments: Vec<&'a str>,
    passed: bool,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "polaron-lab")]
    lab: &'static str,
    #[serde(rename = "polaron-core")]
    core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    versions: Versions,
    command: &'a str,
    config: &'a crate::config::RunConfig,
    outputs: Vec<String>,
    timings: &'static str,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const TIMINGS_FILE: &str = "timings.log";

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

/// Writes tables, documents, the report, the manifest and the timing log.
pub fn write_all(
    dir: &Path,
    command: &str,
    experiments: &[&str],
    config: &crate::config::RunConfig,
    outcome: &Outcome,
    timings: &[(String, f64)],
) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for t in &outcome.tables {
        fs::write(dir.join(&t.name), t.to_csv())?;
        outputs.push(t.name.clone());
    }
    for (name, doc) in &outcome.documents {
        fs::write(dir.join(name), pretty(doc))?;
        outputs.push(name.clone());
    }
    let report = Report {
        schema_version: crate::config::SCHEMA_VERSION,
        command,
        experiments: experiments.to_vec(),
        passed: outcome.passed(),
        checks: &outcome.checks,
    };
    fs::write(dir.join(REPORT_FILE), pretty(&report))?;
    outputs.push(REPORT_FILE.to_string());
    outputs.sort();
    let manifest = Manifest {
        schema_version: crate::config::SCHEMA_VERSION,
        tool: "polaron-lab",
        versions: Versions {
            lab: env!("CARGO_PKG_VERSION"),
            core: polaron_core::VERSION,
        },
        command,
        config,
        outputs: outputs.clone(),
        timings: TIMINGS_FILE,
    };
    fs::write(dir.join(MANIFEST_FILE), pretty(&manifest))?;
    let log: String = timings.iter().map(|(stage, secs)| format!("{stage} {secs:.6}\n")).collect();
    fs::write(dir.join(TIMINGS_FILE), log)?;
    outputs.push(MANIFEST_FILE.to_string());
    outputs.push(TIMINGS_FILE.to_string());
    Ok(outputs)
}
