use std::path::Path;

use crate::error::Result;

/// One CSV cell; `None` is written as an empty field.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed sidecar: header plus optional numeric cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Sidecar {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Sidecar {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column; empty cells are `None`. Panics on a missing column
    /// only through `Option` (returns `None`).
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| {
                    let s = &r[idx];
                    if s.is_empty() {
                        None
                    } else {
                        s.parse().ok()
                    }
                })
                .collect(),
        )
    }
}

pub fn level_column(level: f64) -> String {
    format!("q{level}")
}
