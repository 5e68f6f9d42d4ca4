//! JSON reports and CSV convergence tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use okounkov_core::fit::TableRow;
use okounkov_core::invariants::{NamedTable, Verdict};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Tolerances};
use crate::RunError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub check: String,
    pub config_hash: String,
    pub tolerances: Tolerances,
    pub inputs: Value,
    pub per_level: Value,
    pub fitted: Value,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<NamedTable>,
}

/// SHA-256 of the canonical JSON of the effective configuration. The output
/// directory is not part of it.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report data serializes")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let mut f = fs::File::create(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    f.write_all(bytes).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn csv(rows: &[TableRow]) -> String {
    let mut out = String::from("m,value,model_fit,residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.m, r.value, r.model_fit, r.residual
        ));
    }
    out
}

/// Writes `<check>.json` and one `<check>__<table>.csv` per table; returns
/// the files written.
pub fn write_report(dir: &Path, report: &Report) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut written = Vec::new();
    let path = dir.join(format!("{}.json", report.check));
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write_file(&path, text.as_bytes())?;
    written.push(path);
    for t in &report.tables {
        let path = dir.join(format!("{}__{}.csv", report.check, t.name));
        write_file(&path, csv(&t.rows).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryEntry {
    pub check: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub config_hash: String,
    pub tolerances: Tolerances,
    pub checks: Vec<SummaryEntry>,
    pub verdict: Verdict,
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<PathBuf, RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    write_file(&path, text.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_rows() {
        let rows = vec![TableRow {
            m: 2.0,
            value: 0.5,
            model_fit: 0.25,
            residual: 0.25,
        }];
        assert_eq!(csv(&rows), "m,value,model_fit,residual\n2,0.5,0.25,0.25\n");
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = crate::config::parse_config(r#"{"series": {"projective": 1}}"#).unwrap();
        let h = config_hash(&a);
        a.out = PathBuf::from("elsewhere");
        assert_eq!(config_hash(&a), h);
        a.seed = 5;
        assert_ne!(config_hash(&a), h);
        assert_eq!(h.len(), 64);
    }
}
