//! CSV and manifest writers. Numbers use a fixed 17-significant-digit
//! scientific format, which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// In-memory CSV table with a mandatory header row.
#[derive(Clone, Debug)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Field snapshots: a header, the grid row tagged `x`, then one row per
/// snapshot tagged by its time.
#[derive(Clone, Debug, Default)]
pub struct Snapshots {
    pub grid: Vec<f64>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

impl Snapshots {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 0..self.grid.len() {
            let _ = write!(out, ",u{j}");
        }
        out.push_str("\nx");
        for x in &self.grid {
            let _ = write!(out, ",{}", fmt_num(*x));
        }
        out.push('\n');
        for (t, values) in &self.rows {
            out.push_str(&fmt_num(*t));
            for v in values {
                let _ = write!(out, ",{}", fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses a CSV written by [`Table::to_csv`].
pub fn parse_csv(text: &str) -> Result<Table, String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty file")?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut table = Table::new(header);
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != table.header.len() {
            return Err(format!(
                "row {} has {} cells, header has {}",
                i + 1,
                row.len(),
                table.header.len()
            ));
        }
        table.rows.push(row);
    }
    Ok(table)
}

/// Output directory for one run.
#[derive(Clone, Debug)]
pub struct Sink {
    dir: PathBuf,
}

impl Sink {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
