use std::path::Path;

use crate::error::{Error, Result};
use crate::io::atomic::write_atomic;

/// One tab-separated line per vector, LF-terminated.
pub fn format_vectors<V: AsRef<[f64]>>(rows: &[V]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

/// Parses tab-separated vectors; every line must have the arity of the first.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_vectors(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split('\t')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| Error::Parse {
                    what: "vector file",
                    line: n + 1,
                    detail: format!("{c:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    what: "vector file",
                    line: n + 1,
                    detail: format!("expected {} values, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_vectors<V: AsRef<[f64]>>(path: &Path, rows: &[V]) -> Result<()> {
    write_atomic(path, format_vectors(rows).as_bytes())
}

pub fn read_vectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_vectors(&std::fs::read_to_string(path)?)
}
