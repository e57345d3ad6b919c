//! Reports: named checks, free-form results and CSV tables, written as
//! `report.json`, `summary.txt` and one CSV file per table.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Limit {
    AtMost(f64),
    AtLeast(f64),
    Below(f64),
    Between(f64, f64),
    Equals(f64),
}

impl Limit {
    pub fn admits(&self, v: f64) -> bool {
        match *self {
            Limit::AtMost(t) => v <= t,
            Limit::AtLeast(t) => v >= t,
            Limit::Below(t) => v < t,
            Limit::Between(lo, hi) => (lo..=hi).contains(&v),
            Limit::Equals(t) => v == t,
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::AtMost(t) => write!(f, "<= {t:e}"),
            Limit::AtLeast(t) => write!(f, ">= {t:e}"),
            Limit::Below(t) => write!(f, "< {t:e}"),
            Limit::Between(lo, hi) => write!(f, "in [{lo}, {hi}]"),
            Limit::Equals(t) => write!(f, "== {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: Limit,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, limit: Limit) -> Self {
        Self { name: name.into(), value, limit, pass: limit.admits(value) }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::new(name, value, Limit::AtMost(tol))
    }

    /// A yes/no condition, recorded as 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Limit::Equals(1.0))
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} = {:e} ({})", self.name, self.value, self.limit)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row; `None` leaves the cell empty.
    pub fn push(&mut self, row: &[Option<f64>]) {
        self.rows.push(row.iter().map(|c| c.map(|v| v.to_string()).unwrap_or_default()).collect());
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self { command: command.into(), ..Self::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.results.insert(key.into(), value.into());
        self
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.checks.push(c);
        self
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) -> &mut Self {
        self.checks.extend(checks);
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, if self.passed() { "ok" } else { "FAILED" });
        for c in &self.checks {
            out.push_str(&format!("  {c}\n"));
        }
        for t in &self.tables {
            out.push_str(&format!("  table {} ({} rows)\n", t.name, t.rows.len()));
        }
        out
    }
}

fn write_csv(path: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&t.header)?;
    for row in &t.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the report files into `dir` (created if needed) and returns their
/// paths.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let json = dir.join("report.json");
    fs::write(&json, report.to_json()?).with_context(|| format!("writing {}", json.display()))?;
    written.push(json);
    let summary = dir.join("summary.txt");
    fs::write(&summary, report.summary()).with_context(|| format!("writing {}", summary.display()))?;
    written.push(summary);
    for t in &report.tables {
        let path = dir.join(format!("{}.csv", t.name));
        write_csv(&path, t).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid() {
        let r = Report::new("empty");
        assert!(r.passed());
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["checks"], Value::Array(vec![]));
    }

    #[test]
    fn failing_check_is_named() {
        let mut r = Report::new("suite");
        r.check(Check::at_most("root", 1e-14, 1e-12)).check(Check::at_most("cayley", 1e-3, 1e-12));
        assert!(!r.passed());
        assert_eq!(r.failures().map(|c| c.name.as_str()).collect::<Vec<_>>(), ["cayley"]);
        assert!(r.summary().contains("FAIL cayley"));
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(!Check::new("x", f64::NAN, Limit::Between(0.0, 1.0)).pass);
    }

    #[test]
    fn mass_table_header() {
        let dir = std::env::temp_dir().join(format!("bvlab-report-{}", std::process::id()));
        let mut r = Report::new("mass");
        let mut t = Table::new("mass", &["t", "mass", "estimate", "error"]);
        t.push(&[Some(0.5), Some(0.785), Some(1e-4), None]);
        r.tables.push(t);
        emit_report(&r, &dir).unwrap();
        let csv = fs::read_to_string(dir.join("mass.csv")).unwrap();
        assert!(csv.starts_with("t,mass,estimate,error\n0.5,0.785,0.0001,\n"));
        fs::remove_dir_all(dir).unwrap();
    }
}
