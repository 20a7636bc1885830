//! Minimal CSV dialect shared by every exporter: comma separated, `.`
//! decimal point, one header row, `#`-prefixed metadata lines, and floats
//! printed with 17 significant digits so that files are byte-reproducible.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// An in-memory CSV table with metadata comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            metadata: Vec::new(),
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.metadata.push((key.into(), value.into()));
        self
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = CsvTable::default();
        let mut have_header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                match rest.split_once(':') {
                    Some((k, v)) => table.metadata.push((k.trim().into(), v.trim().into())),
                    None => table.metadata.push((rest.into(), String::new())),
                }
                continue;
            }
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            if !have_header {
                table.header = cells;
                have_header = true;
            } else {
                if cells.len() != table.header.len() {
                    return Err(Error::Config(format!(
                        "csv line {}: expected {} cells, found {}",
                        lineno + 1,
                        table.header.len(),
                        cells.len()
                    )));
                }
                table.rows.push(cells);
            }
        }
        if !have_header {
            return Err(Error::Config("csv input has no header row".into()));
        }
        Ok(table)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("csv column '{name}' not found")))
    }

    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column(name)?;
        self.rows
            .iter()
            .map(|r| {
                parse_f64(&r[idx])
                    .ok_or_else(|| Error::Config(format!("bad number '{}' in column {name}", r[idx])))
            })
            .collect()
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}
