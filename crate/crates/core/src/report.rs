//! Report documents: run manifest, named tables, discrepancy notices; JSON,
//! CSV and plain-text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domains::DomainKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub schema_version: u32,
    pub command: String,
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub domain: Option<DomainKind>,
    pub n: Option<usize>,
    /// Every parameter that affects numeric output.
    pub config: Value,
    /// Seconds since the Unix epoch when the manifest was created.
    pub timestamp: u64,
    pub suites: Vec<SuiteResult>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, domain: Option<DomainKind>, n: Option<usize>, config: Value) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            command_line: Vec::new(),
            seed,
            domain,
            n,
            config,
            timestamp,
            suites: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

/// A flat record list; every row has one cell per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match columns");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Value> {
        self.column(column).and_then(|c| self.rows.get(row).map(|r| &r[c]))
    }
}

/// A published formula that measurement does not support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyNotice {
    #[serde(rename = "paper_claim")]
    pub published_claim: String,
    #[serde(rename = "paper_location")]
    pub published_location: String,
    pub measured: String,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timing {
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub manifest: RunManifest,
    pub tables: BTreeMap<String, Table>,
    pub discrepancies: Vec<DiscrepancyNotice>,
    pub timing: Timing,
}

impl ReportDocument {
    pub fn new(manifest: RunManifest) -> Self {
        Self {
            manifest,
            tables: BTreeMap::new(),
            discrepancies: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn passed(&self) -> bool {
        self.manifest.passed()
    }

    pub fn add_suite(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.manifest.suites.push(SuiteResult {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are always serializable")
    }

    /// The report with wall-clock fields removed; equal across reruns of
    /// the same command line on the same build.
    pub fn deterministic_view(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report values are always serializable");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
            if let Some(m) = obj.get_mut("manifest").and_then(Value::as_object_mut) {
                m.remove("timestamp");
            }
        }
        v
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_json() + "\n")
    }

    /// One `<name>.csv` per table, plus `discrepancies.csv` when notices exist.
    pub fn write_csv_dir(&self, dir: &Path) -> std::result::Result<(), Box<dyn std::error::Error>> {
        fs::create_dir_all(dir)?;
        for (name, table) in &self.tables {
            let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))?;
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(cell_text))?;
            }
            w.flush()?;
        }
        if !self.discrepancies.is_empty() {
            let mut w = csv::Writer::from_path(dir.join("discrepancies.csv"))?;
            for d in &self.discrepancies {
                w.serialize(d)?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// Plain-text summary for the terminal.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let m = &self.manifest;
        let _ = write!(out, "{} {}", m.tool, m.command);
        if let (Some(d), Some(n)) = (m.domain, m.n) {
            let _ = write!(out, "  domain={d} N={n}");
        }
        if let Some(s) = m.seed {
            let _ = write!(out, "  seed={s}");
        }
        out.push('\n');
        for (name, table) in &self.tables {
            let _ = writeln!(out, "\n[{name}]");
            out.push_str(&render_table(table));
        }
        for d in &self.discrepancies {
            let _ = writeln!(
                out,
                "\nDISCREPANCY {}: published {} | measured {} | {}",
                d.published_location, d.published_claim, d.measured, d.verdict
            );
        }
        out.push('\n');
        for s in &m.suites {
            let _ = writeln!(out, "{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
        }
        out
    }
}

pub fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn render_table(t: &Table) -> String {
    let cells: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|v| match v {
                    Value::Number(n) if n.is_f64() => format_float(n.as_f64().unwrap_or(f64::NAN)),
                    other => cell_text(other),
                })
                .collect()
        })
        .collect();
    let mut widths: Vec<usize> = t.columns.iter().map(|c| c.chars().count()).collect();
    for r in &cells {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, items: &[String]| {
        let parts: Vec<String> = items
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        let _ = writeln!(out, "  {}", parts.join("  "));
    };
    line(&mut out, &t.columns);
    for r in &cells {
        line(&mut out, r);
    }
    out
}

fn format_float(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e-3 && x.abs() < 1e6 {
        let s = format!("{x:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{x:.3e}")
    }
}
