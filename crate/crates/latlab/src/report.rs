//! CSV emission with fixed-width float serialization so identical runs
//! produce identical bytes on every platform.

use std::fmt::Write as _;

/// One CSV cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Str(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

/// 17 significant digits in scientific notation: enough to round-trip any
/// f64, fixed width so diffs are meaningful.
pub fn fmt17(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn render_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => fmt17(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Str(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
    }
}

/// A CSV table with a fixed header.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(render_cell).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_to(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}
