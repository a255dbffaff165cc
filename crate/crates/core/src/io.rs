//! Plain-text numeric tables.
//!
//! `output.out` style files hold whitespace-separated floats, one row per time
//! step. `result.txt` holds comma-separated floats, one iterate per line. Values
//! are written with Rust's shortest round-trip rendering, so reading a file back
//! yields the exact same `f64`s.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Shortest decimal rendering that parses back to the same value (`1.5`, `2.0`, `450000.0`).
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

pub fn format_row(values: &[f64], separator: &str) -> String {
    values
        .iter()
        .map(|v| format_value(*v))
        .collect::<Vec<_>>()
        .join(separator)
}

fn parse_rows(path: &Path, text: &str, split: impl Fn(&str) -> Vec<&str>) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = split(line)
            .into_iter()
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("cannot parse {tok:?} as a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected {first} columns, found {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_whitespace_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rows(path, &text, |l| l.split_whitespace().collect())
}

pub fn read_comma_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rows(path, &text, |l| l.split(',').collect())
}

fn write_table(path: &Path, rows: &[Vec<f64>], separator: &str) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&format_row(r, separator));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_whitespace_table(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    write_table(path, rows, " ")
}

pub fn write_comma_table(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    write_table(path, rows, ",")
}

/// Appends one line of text, creating the file if needed.
pub fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    writeln!(f, "{line}").map_err(|e| Error::io(path, e))
}
