//! CSV and JSON reports, written atomically.

use crate::exec::{CheckResult, Status};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
pub struct Summary<'a> {
    pub schema: u32,
    pub scenario: &'a str,
    pub description: &'a str,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub passed: bool,
    pub checks: &'a [CheckResult],
}

#[derive(Serialize)]
struct Row<'a> {
    index: usize,
    check: &'a str,
    status: Status,
    value: Option<f64>,
    threshold: Option<f64>,
    detail: &'a str,
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Shortest round-trip text, in exponent form outside [1e-4, 1e6).
fn number(v: f64) -> String {
    if v == 0.0 || (1e-4..1e6).contains(&v.abs()) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn csv_bytes<F>(fill: F) -> std::io::Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w).map_err(std::io::Error::other)?;
    w.into_inner()
        .map_err(|e| std::io::Error::other(e.to_string()))
}

/// Writes the check table, one data table per check that has one, and the
/// JSON summary. Returns the paths written.
pub fn write_reports(
    out_dir: &Path,
    csv_name: &str,
    json_name: &str,
    summary: &Summary,
) -> std::io::Result<Vec<PathBuf>> {
    let mut written = vec![];
    let csv_path = out_dir.join(csv_name);
    let bytes = csv_bytes(|w| {
        for c in summary.checks {
            w.serialize(Row {
                index: c.index,
                check: &c.check,
                status: c.status,
                value: c.value,
                threshold: c.threshold,
                detail: &c.detail,
            })?;
        }
        Ok(())
    })?;
    write_atomic(&csv_path, &bytes)?;
    written.push(csv_path.clone());
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(summary.scenario)
        .to_string();
    for c in summary.checks {
        if let Some(t) = &c.table {
            let p = out_dir.join(format!("{stem}.check{}.{}.csv", c.index, c.check));
            let bytes = csv_bytes(|w| {
                w.write_record(&t.header)?;
                for r in &t.rows {
                    w.write_record(r.iter().map(|v| number(*v)))?;
                }
                Ok(())
            })?;
            write_atomic(&p, &bytes)?;
            written.push(p);
        }
    }
    let json_path = out_dir.join(json_name);
    let mut text = serde_json::to_vec_pretty(summary).map_err(std::io::Error::other)?;
    text.push(b'\n');
    write_atomic(&json_path, &text)?;
    written.push(json_path);
    Ok(written)
}
