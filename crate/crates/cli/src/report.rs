//! Report emission: sorted-key JSON and the CSV probability table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dynatomo::matcore::{CMatrix, C64};
use dynatomo::rud::ProbabilityRecord;
use serde_json::{json, Value};

use crate::error::CliError;

pub const CSV_HEADER: &str = "t,p_exact,p_sampled,shots";

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRow {
    pub t: f64,
    pub p_exact: f64,
    pub p_sampled: f64,
    pub shots: u64,
}

/// A JSON document plus an optional probability table. `failure` is set
/// when the run finished but a check did not hold; the files are still
/// written so the failure can be inspected.
#[derive(Debug)]
pub struct Report {
    pub json: Value,
    pub table: Option<Vec<ProbabilityRow>>,
    pub failure: Option<CliError>,
}

impl Report {
    pub fn new(json: Value) -> Self {
        Self {
            json,
            table: None,
            failure: None,
        }
    }

    pub fn with_table(mut self, table: Vec<ProbabilityRow>) -> Self {
        self.table = Some(table);
        self
    }
}

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn vector(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|z| complex(*z)).collect())
}

/// Row-major `[[[re, im], …], …]`.
pub fn matrix(m: &CMatrix) -> Value {
    Value::Array((0..m.rows()).map(|r| vector(m.row(r))).collect())
}

pub fn matrices(ms: &[CMatrix]) -> Value {
    Value::Array(ms.iter().map(matrix).collect())
}

pub fn table_from_record(rec: &ProbabilityRecord) -> Vec<ProbabilityRow> {
    rec.instants
        .iter()
        .zip(&rec.exact)
        .zip(&rec.values)
        .map(|((&t, &p_exact), &p_sampled)| ProbabilityRow {
            t,
            p_exact,
            p_sampled,
            shots: rec.shots,
        })
        .collect()
}

pub fn table_json(rows: &[ProbabilityRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| json!({"t": r.t, "p_exact": r.p_exact, "p_sampled": r.p_sampled, "shots": r.shots}))
            .collect(),
    )
}

pub fn render_csv(rows: &[ProbabilityRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        // f64 Display is the shortest round-trip decimal, never exponential
        writeln!(out, "{},{},{},{}", r.t, r.p_exact, r.p_sampled, r.shots).unwrap();
    }
    out
}

pub fn render_json(v: &Value) -> String {
    // serde_json's map is a BTreeMap (no preserve_order), so keys come out sorted
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes the JSON report and, when `csv` is given and the report carries a
/// table, the CSV. Returns the paths written.
pub fn emit_report(report: &Report, json_path: &Path, csv: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    write(json_path, &render_json(&report.json))?;
    let mut written = vec![json_path.to_path_buf()];
    if let (Some(path), Some(rows)) = (csv, &report.table) {
        write(path, &render_csv(rows))?;
        written.push(path.to_path_buf());
    }
    Ok(written)
}
