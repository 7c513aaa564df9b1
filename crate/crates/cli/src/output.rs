//! Tables rendered as CSV or JSON.

use std::fmt::Write as _;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Bool(bool),
    Text(String),
    Null,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Num)
    }
}

impl Cell {
    /// CSV text: shortest round-trip decimals, `.` separator, empty for missing.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format!("{v:?}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Null => Value::Null,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub name: &'static str,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, headers: &[&'static str]) -> Self {
        Self { name, headers: headers.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    fn json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> =
                        self.headers.iter().zip(r).map(|(h, c)| (h.to_string(), c.json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    fn csv(&self) -> anyhow::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Tables plus metadata that only the JSON form carries.
#[derive(Debug, Default)]
pub struct Report {
    pub meta: Map<String, Value>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn single(table: Table) -> Self {
        Self { meta: Map::new(), tables: vec![table] }
    }

    pub fn meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn render(&self, format: Format) -> anyhow::Result<String> {
        match format {
            Format::Json => {
                let value = if self.meta.is_empty() && self.tables.len() == 1 {
                    self.tables[0].json()
                } else {
                    let mut obj = self.meta.clone();
                    for t in &self.tables {
                        obj.insert(t.name.to_string(), t.json());
                    }
                    Value::Object(obj)
                };
                let mut s = serde_json::to_string_pretty(&value)?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut out = String::new();
                for (i, t) in self.tables.iter().enumerate() {
                    if i > 0 {
                        out.push('\n');
                    }
                    if self.tables.len() > 1 {
                        writeln!(out, "# {}", t.name)?;
                    }
                    out.push_str(&t.csv()?);
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_round_trip_decimals() {
        let mut t = Table::new("t", &["k", "x", "flag", "missing"]);
        t.push(vec![1usize.into(), 0.1.into(), true.into(), Cell::Null]);
        t.push(vec![2usize.into(), 1e-100.into(), false.into(), 3.0.into()]);
        let s = Report::single(t).render(Format::Csv).unwrap();
        assert_eq!(s, "k,x,flag,missing\n1,0.1,true,\n2,1e-100,false,3.0\n");
    }

    #[test]
    fn json_single_table_is_an_array() {
        let mut t = Table::new("t", &["k", "x"]);
        t.push(vec![1usize.into(), f64::NAN.into()]);
        let s = Report::single(t).render(Format::Json).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v, serde_json::json!([{"k": 1, "x": null}]));
    }

    #[test]
    fn json_with_meta_is_an_object() {
        let t = Table::new("rows", &["a"]);
        let s = Report::single(t).meta("q", 0.5).render(Format::Json).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v, serde_json::json!({"q": 0.5, "rows": []}));
    }
}
