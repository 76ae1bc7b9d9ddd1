//! CSV ingestion and output helpers.

use std::fs::File;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{io_error, CliError, CliResult};

/// Numeric columns of a headered CSV, one row per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn d(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

fn open_reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

pub fn read_header(path: &Path) -> CliResult<Vec<String>> {
    let mut reader = open_reader(path)?;
    let header = reader.headers().map_err(|e| io_error(path, e))?;
    Ok(header.iter().map(str::to_string).collect())
}

/// Column names to model: the configured list, or every column except the
/// timestamp. Unknown names are configuration errors.
pub fn resolve_variables(header: &[String], cfg: &RunConfig) -> CliResult<Vec<String>> {
    if let Some(t) = &cfg.timestamp_column {
        if !header.contains(t) {
            return Err(CliError::Config(format!("timestamp column '{t}' not found")));
        }
    }
    let names: Vec<String> = if cfg.variables.is_empty() {
        header
            .iter()
            .filter(|h| Some(*h) != cfg.timestamp_column.as_ref())
            .cloned()
            .collect()
    } else {
        cfg.variables.clone()
    };
    if let Some(missing) = names.iter().find(|n| !header.contains(n)) {
        return Err(CliError::Config(format!("column '{missing}' not found")));
    }
    if let Some(cause) = &cfg.cause_variable {
        if !names.contains(cause) {
            return Err(CliError::Config(format!("cause column '{cause}' not among the modelled variables")));
        }
    }
    if names.is_empty() {
        return Err(CliError::Config("no variable columns".into()));
    }
    Ok(names)
}

/// Reads the named columns; rows with missing or non-numeric entries are
/// rejected with their line numbers.
pub fn load_columns(path: &Path, names: &[String]) -> CliResult<Dataset> {
    let mut reader = open_reader(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| io_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| header.iter().position(|h| h == n).ok_or_else(|| CliError::Config(format!("column '{n}' not found"))))
        .collect::<CliResult<_>>()?;
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| io_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Option<Vec<f64>> = idx
            .iter()
            .map(|&i| record.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite()))
            .collect();
        match row {
            Some(r) => rows.push(r),
            None => bad.push(line),
        }
    }
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(10).map(u64::to_string).collect();
        let more = if bad.len() > 10 { format!(" and {} more", bad.len() - 10) } else { String::new() };
        return Err(CliError::Data(format!(
            "{}: missing or non-numeric values on line(s) {}{more}",
            path.display(),
            shown.join(", ")
        )));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    Ok(Dataset {
        names: names.to_vec(),
        rows,
    })
}

/// Writes a CSV with the given header and rows of string cells.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    x.to_string()
}
