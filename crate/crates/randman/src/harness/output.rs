//! Artifact serialization.
//!
//! CSV artifacts open with `#` comment lines carrying the crate version, the
//! master seed and the resolved config as JSON, followed by a header row.
//! Floats are written as `{:.16e}` (17 significant digits, round-trip exact).
//! Read them back with `csv::ReaderBuilder::new().comment(Some(b'#'))`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::experiments::Table;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// A named table of mixed cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Sheet {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Sheet {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Sheet {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

impl From<Table> for Sheet {
    fn from(t: Table) -> Self {
        Sheet {
            name: t.name,
            columns: t.columns,
            rows: t.rows.into_iter().map(|r| r.into_iter().map(Cell::Num).collect()).collect(),
        }
    }
}

/// What every artifact embeds about its run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub version: String,
    pub command: String,
    pub master_seed: u64,
    pub config: Value,
}

pub fn sheet_csv(sheet: &Sheet, header: &Header) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(
        format!(
            "# randman {}\n# command = {}\n# master_seed = {}\n# config = {}\n",
            header.version,
            header.command,
            header.master_seed,
            serde_json::to_string(&header.config).map_err(|e| Error::Io(e.to_string()))?
        )
        .as_bytes(),
    );
    let mut wr = csv::Writer::from_writer(&mut out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wr.write_record(&sheet.columns).map_err(io)?;
    for row in &sheet.rows {
        wr.write_record(row.iter().map(Cell::csv)).map_err(io)?;
    }
    wr.flush()?;
    drop(wr);
    Ok(out)
}

pub fn sheet_json(sheet: &Sheet, header: &Header) -> Result<Vec<u8>> {
    let rows: Vec<Value> = sheet
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
        .collect();
    let doc = json!({
        "header": header,
        "name": sheet.name,
        "columns": sheet.columns,
        "rows": rows,
    });
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// The run manifest; keys serialize in sorted order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub header: Header,
    pub artifacts: Vec<String>,
    pub seeds: std::collections::BTreeMap<String, u64>,
    pub threads: usize,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let v = serde_json::to_value(self).map_err(|e| Error::Io(e.to_string()))?;
        let mut out = serde_json::to_vec_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
        out.push(b'\n');
        Ok(out)
    }
}
