//! Result records and their CSV / JSON renderings.

use std::fmt;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};

/// Bumped whenever the column layout of any operation changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        })
    }
}

/// Whether a column carries an entropy-like quantity that `--bits` rescales.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Information,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: Kind,
}

impl Column {
    pub fn info(name: &str) -> Self {
        Column { name: name.to_string(), kind: Kind::Information }
    }

    pub fn plain(name: &str) -> Self {
        Column { name: name.to_string(), kind: Kind::Plain }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl Cell {
    fn scaled(&self, factor: f64) -> Cell {
        match self {
            Cell::Real(x) => Cell::Real(x * factor),
            other => other.clone(),
        }
    }

    fn csv(&self) -> String {
        match self {
            // Shortest round-trip form, switching to exponent notation for tiny and huge values.
            Cell::Real(x) => format!("{x:?}"),
            Cell::Int(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) if x.is_finite() => json!(x),
            Cell::Real(x) => json!(x.to_string()),
            Cell::Int(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Real(x) => Some(*x),
            Cell::Int(x) => Some(*x as f64),
            _ => None,
        }
    }
}

/// Outcome of one run. Values are stored in nats; `units` applies on output only.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub operation: String,
    pub version: String,
    pub seed: Option<u64>,
    pub units: Units,
    /// Echo of the inputs that determine the result.
    pub inputs: Vec<(String, String)>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    /// Seconds spent in the operation; reported on stderr, never in the result body.
    pub wall_time_s: f64,
    /// False when a `check` group failed.
    pub passed: bool,
}

impl ResultRecord {
    pub fn new(operation: &str, columns: Vec<Column>) -> Self {
        ResultRecord {
            operation: operation.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            units: Units::Nats,
            inputs: Vec::new(),
            columns,
            rows: Vec::new(),
            wall_time_s: 0.0,
            passed: true,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Value in nats at `(row, column name)`.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        self.column(name).and_then(|c| self.rows.get(row)?.get(c)?.as_f64())
    }

    fn factor(&self, column: &Column) -> f64 {
        match (self.units, column.kind) {
            (Units::Bits, Kind::Information) => 1.0 / std::f64::consts::LN_2,
            _ => 1.0,
        }
    }

    fn display_rows(&self) -> impl Iterator<Item = Vec<Cell>> + '_ {
        self.rows.iter().map(|row| row.iter().zip(&self.columns).map(|(cell, col)| cell.scaled(self.factor(col))).collect())
    }

    fn header_comment(&self) -> String {
        let mut line = format!("# hmprate-result v{SCHEMA_VERSION}; operation={}; version={}; units={}", self.operation, self.version, self.units);
        if let Some(seed) = self.seed {
            line += &format!("; seed={seed}");
        }
        for (k, v) in &self.inputs {
            line += &format!("; {k}={v}");
        }
        line
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = self.header_comment().into_bytes();
        out.push(b'\n');
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(io)?;
            for row in self.display_rows() {
                w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        String::from_utf8(out).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Value> = self
            .display_rows()
            .map(|row| Value::Object(self.columns.iter().zip(&row).map(|(c, v)| (c.name.clone(), v.json())).collect::<Map<_, _>>()))
            .collect();
        let inputs: Map<String, Value> = self.inputs.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let doc = json!({
            "schema": format!("hmprate-result/v{SCHEMA_VERSION}"),
            "operation": self.operation,
            "version": self.version,
            "seed": self.seed,
            "units": self.units,
            "inputs": inputs,
            "columns": self.columns.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}
