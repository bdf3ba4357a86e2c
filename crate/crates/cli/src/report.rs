//! Tabular output: CSV (full precision, the plotting format) or an aligned
//! text table.

use std::io::{self, Write};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    /// A fraction, shown as a percentage in tables.
    Share(f64),
    Missing,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) | Cell::Share(v) => v.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn table(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v:.4}"),
            Cell::Share(v) => format!("{:.1}%", v * 100.0),
            Cell::Missing => "-".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(header: Vec<&'static str>) -> Self {
        Report {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, out: &mut dyn Write, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.header)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()
            }
            Format::Table => {
                let cells: Vec<Vec<String>> = self
                    .rows
                    .iter()
                    .map(|r| r.iter().map(Cell::table).collect())
                    .collect();
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for row in &cells {
                    for (w, c) in widths.iter_mut().zip(row) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let header: Vec<String> = self.header.iter().map(|h| h.to_string()).collect();
                for row in std::iter::once(&header).chain(&cells) {
                    let mut line = String::new();
                    for (i, (c, w)) in row.iter().zip(&widths).enumerate() {
                        if i == 0 {
                            line.push_str(&format!("{c:<w$}"));
                        } else {
                            line.push_str(&format!("  {c:>w$}"));
                        }
                    }
                    writeln!(out, "{}", line.trim_end())?;
                }
                Ok(())
            }
        }
    }
}
