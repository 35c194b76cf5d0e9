//! Report, plot-table and field-dump files of an experiment run.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentKind;
use crate::algebra::{io, MatrixField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub h: f64,
    pub pass: bool,
    /// The headline scalar of the experiment, compared with `tolerance`.
    pub gap: f64,
    pub tolerance: f64,
    pub details: serde_json::Value,
    /// Numerical error that aborted the run, if any.
    pub error: Option<String>,
}

/// Whitespace-free comma-separated numeric table with a `#` header line, so
/// gnuplot reads it with `set datafile separator ","`.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Shortest round-trip decimal form; identical bits give identical text.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub report: Report,
    pub fields: Vec<(String, MatrixField)>,
    pub plots: Vec<Table>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

impl Artifacts {
    /// Writes `report.json`, `fields/<name>.bin` and `plot/<name>.csv` under
    /// `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("report.json"), &self.report)?;
        if !self.fields.is_empty() {
            let fields = dir.join("fields");
            fs::create_dir_all(&fields).map_err(|e| io_err(&fields, e))?;
            for (name, field) in &self.fields {
                let path = fields.join(format!("{name}.bin"));
                let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
                io::write_binary(field, BufWriter::new(file))?;
            }
        }
        for table in &self.plots {
            write_text(&dir.join("plot").join(format!("{}.csv", table.name)), &table.to_csv())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_text_is_stable() {
        let mut t = Table::new("gaps", &["h", "gap"]);
        t.push(vec![0.0078125, 1.25e-9]);
        t.push(vec![0.5, f64::NAN]);
        assert_eq!(t.to_csv(), "# h,gap\n7.8125e-3,1.25e-9\n5e-1,nan\n");
    }
}
