//! Tabular result files.
//!
//! CSV floats are written as `{:.16e}` (17 significant digits), so a value
//! read back parses to the same `f64`. JSON tables are `{"columns": [...],
//! "rows": [[...], ...]}` with the same column order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value as Json};

use crate::config::OutputFormat;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Cell::Float(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Json::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Numeric values of one column, `None` for non-numeric cells.
    pub fn floats(&self, name: &str) -> Vec<Option<f64>> {
        let k = self
            .column_index(name)
            .unwrap_or_else(|| panic!("no column {name} in {}", self.name));
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Json {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|r| Json::Array(r.iter().map(Cell::json).collect()))
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => pretty(&self.to_json()),
        }
    }

    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.{}", self.name, format.extension()));
        fs::write(&path, self.render(format))?;
        Ok(path)
    }
}

pub fn pretty(value: &Json) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, value: &Json) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, pretty(value))?;
    Ok(())
}
