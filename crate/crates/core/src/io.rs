//! Artifact documents: metadata, scalar results and column tables, rendered
//! as CSV (17 significant digits) or versioned JSON.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::error::{invalid, Result};

pub const TOOL: &str = "lamperti";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, `.` separator, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = crate::LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => invalid(format!("unknown format '{other}' (csv, json)")),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) if x.is_finite() => json!(x),
            Cell::F(x) => json!(fmt_f64(*x)),
            Cell::I(i) => json!(i),
            Cell::S(s) => json!(s),
            Cell::B(b) => json!(b),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map(Cell::F).unwrap_or(Cell::Missing)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::I(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

/// Named columns of equal length.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, Vec<Cell>)>,
}

impl Table {
    pub fn new(name: &str) -> Self {
        Table { name: name.into(), columns: Vec::new() }
    }

    pub fn column<T: Into<Cell>>(mut self, name: &str, values: impl IntoIterator<Item = T>) -> Self {
        self.columns.push((name.into(), values.into_iter().map(Into::into).collect()));
        self
    }

    fn rows(&self) -> usize {
        self.columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct Document {
    pub schema: String,
    pub meta: Vec<(String, Value)>,
    pub results: Vec<(String, Cell)>,
    pub tables: Vec<Table>,
}

impl Document {
    pub fn new(kind: &str, meta: Vec<(String, Value)>) -> Self {
        Document { schema: format!("{TOOL}.{kind}/1"), meta, results: Vec::new(), tables: Vec::new() }
    }

    pub fn result(&mut self, key: &str, value: impl Into<Cell>) -> &mut Self {
        self.results.push((key.into(), value.into()));
        self
    }

    pub fn table(&mut self, t: Table) -> &mut Self {
        self.tables.push(t);
        self
    }

    pub fn lookup(&self, key: &str) -> Option<&Cell> {
        self.results.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn write<W: Write>(&self, w: &mut W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }

    fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# schema: {}", self.schema)?;
        for (k, v) in &self.meta {
            let text = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(w, "# {k}: {text}")?;
        }
        for (k, v) in &self.results {
            writeln!(w, "# result.{k}: {}", v.csv())?;
        }
        for t in &self.tables {
            writeln!(w, "# table: {}", t.name)?;
            let names: Vec<&str> = t.columns.iter().map(|(n, _)| n.as_str()).collect();
            writeln!(w, "{}", names.join(","))?;
            for r in 0..t.rows() {
                let row: Vec<String> =
                    t.columns.iter().map(|(_, v)| v.get(r).map(Cell::csv).unwrap_or_default()).collect();
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), v.clone());
        }
        let mut results = Map::new();
        for (k, v) in &self.results {
            results.insert(k.clone(), v.json());
        }
        let mut tables = Map::new();
        for t in &self.tables {
            let mut cols = Map::new();
            for (n, v) in &t.columns {
                cols.insert(n.clone(), Value::Array(v.iter().map(Cell::json).collect()));
            }
            tables.insert(t.name.clone(), Value::Object(cols));
        }
        json!({ "schema": self.schema, "meta": meta, "results": results, "tables": tables })
    }

    fn write_json<W: Write>(&self, w: &mut W) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("documents serialize");
        writeln!(w, "{text}")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let mut d = Document::new("test", vec![("version".into(), json!("1"))]);
        d.result("verdict", "Transient").result("x", 0.25);
        d.table(Table::new("t").column("j", [1u64, 2]).column("F", [0.5, 1.0]));
        let mut buf = Vec::new();
        d.write(&mut buf, Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# schema: lamperti.test/1\n# version: 1\n# result.verdict: Transient\n# result.x: 2.5000000000000000e-1\n# table: t\nj,F\n1,5.0000000000000000e-1\n2,1.0000000000000000e0\n"
        );
        let j = d.to_json();
        assert_eq!(j["schema"], "lamperti.test/1");
        assert_eq!(j["tables"]["t"]["F"][1], 1.0);
    }
}
