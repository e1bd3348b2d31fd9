//! Row-oriented emission: CSV with fixed headers or a JSON mirror with the
//! same field names. All floating values carry 17 significant digits so
//! reruns are byte-identical.

use std::io::Write;

use crate::config::OutputFormat;
use ucs_core::{Error, Result};

/// A table: header names plus rows of cells.
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Text(String),
    Empty,
}

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Table {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(v) => fmt_float(*v),
                    Cell::Text(s) => s.replace(',', ";"),
                    Cell::Empty => String::new(),
                })
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (name, cell) in self.columns.iter().zip(row.iter()) {
                    let v = match cell {
                        // serialized as a string to keep all 17 digits
                        Cell::Float(v) => serde_json::Value::String(fmt_float(*v)),
                        Cell::Text(s) => serde_json::Value::String(s.clone()),
                        Cell::Empty => serde_json::Value::Null,
                    };
                    obj.insert((*name).to_string(), v);
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({ "rows": rows });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).unwrap())
    }

    pub fn write_to(&self, path: Option<&str>, format: &OutputFormat) -> Result<()> {
        let mut sink: Box<dyn Write> = match path {
            Some(p) => Box::new(
                std::fs::File::create(p)
                    .map_err(|e| Error::Config(format!("cannot create {p}: {e}")))?,
            ),
            None => Box::new(std::io::stdout()),
        };
        let res = match format {
            OutputFormat::Csv => self.write_csv(&mut sink),
            OutputFormat::Json => self.write_json(&mut sink),
        };
        res.map_err(|e| Error::Config(format!("write failed: {e}")))
    }
}
