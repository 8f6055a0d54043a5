//! Plain CSV: header row, `\n` endings, numbers with 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use fracdecay_core::ScalarTrace64;

use crate::error::{CliError, Result};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // keeps -0.0 and 0.0 distinct without an exponent
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // Positional notation carrying 17 significant digits.
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (16 - exp).max(1) as usize;
    format!("{v:.decimals$}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_number(*v),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Writes `contents` to a sibling temp file, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Reads the `t` and `E` columns (by header name, else the first two columns).
pub fn read_trace(path: &Path) -> Result<ScalarTrace64> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trace(&text).map_err(|m| CliError::config("input", format!("{}: {m}", path.display())))
}

pub fn parse_trace(text: &str) -> std::result::Result<ScalarTrace64, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines.next().ok_or("empty file")?.split(',').map(|s| s.trim().to_string()).collect();
    let find = |names: &[&str], fallback: usize| {
        header.iter().position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n))).unwrap_or(fallback)
    };
    let (it, ie) = (find(&["t", "time"], 0), find(&["E", "energy", "u", "H"], 1));
    let mut trace = ScalarTrace64 { times: Vec::new(), values: Vec::new() };
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> std::result::Result<f64, String> {
            cells
                .get(i)
                .ok_or(format!("row {} has no column {i}", k + 2))?
                .parse::<f64>()
                .map_err(|e| format!("row {}: {e}", k + 2))
        };
        trace.times.push(get(it)?);
        trace.values.push(get(ie)?);
    }
    if trace.times.is_empty() {
        return Err("no data rows".into());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5e-7, f64::MIN_POSITIVE] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_number(0.5), "0.50000000000000000");
        assert_eq!(format_number(123.0), "123.00000000000000");
    }

    #[test]
    fn trace_columns_by_name() {
        let tr = parse_trace("E,t\n1.0,0.0\n0.5,1.0\n").unwrap();
        assert_eq!(tr.times, vec![0.0, 1.0]);
        assert_eq!(tr.values, vec![1.0, 0.5]);
        assert!(parse_trace("t,E\n").is_err());
        assert!(parse_trace("t,E\n1,x\n").is_err());
    }
}
