use std::path::{Path, PathBuf};

use super::{SweepResult, SweepRow};
use crate::error::{Error, Result};

const HEADER: &str = "p_s_db,algorithm,metric,value,trials,failures";

/// CSV text of a sweep: one row per (axis point, algorithm, metric),
/// values with 10 significant digits.
pub fn csv_string(result: &SweepResult) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{:.9e},{},{}\n",
            r.p_s_db,
            r.algorithm,
            r.metric.name(),
            r.value,
            r.trials,
            r.failures
        ));
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(result)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Parses text written by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let err = |line: usize, message: String| Error::Parse { path: PathBuf::from("<csv>"), line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(err(1, format!("expected header '{HEADER}'"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err(i + 1, format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|e| err(i + 1, format!("{what}: {e}")));
        let count = |s: &str, what: &str| s.parse::<usize>().map_err(|e| err(i + 1, format!("{what}: {e}")));
        rows.push(SweepRow {
            p_s_db: num(f[0], "p_s_db")?,
            algorithm: f[1].parse().map_err(|e: Error| err(i + 1, e.to_string()))?,
            metric: f[2].parse().map_err(|e: Error| err(i + 1, e.to_string()))?,
            value: num(f[3], "value")?,
            trials: count(f[4], "trials")?,
            failures: count(f[5], "failures")?,
        });
    }
    Ok(rows)
}
