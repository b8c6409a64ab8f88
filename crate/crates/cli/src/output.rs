use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Index(usize),
    Float(f64),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Index(i) => i.to_string(),
            // 17 significant digits: round-trips every f64
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Index(i) => Value::from(*i),
            Cell::Float(x) => Value::from(*x),
            Cell::Empty => Value::Null,
        }
    }
}

/// Column-oriented result of one command, plus descriptive metadata that
/// only the JSON form carries.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub command: &'static str,
    pub metadata: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    command: &'a str,
    metadata: &'a BTreeMap<String, Value>,
    columns: &'a [String],
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = JsonTable {
            command: self.command,
            metadata: &self.metadata,
            columns: &self.columns,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(Cell::json).collect())
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }
}

pub type CsvRows = Vec<Vec<Option<f64>>>;

/// Header and numeric cells of a CSV produced by [`Table::to_csv`]; empty
/// cells come back as `None`.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, CsvRows)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| anyhow!("empty CSV"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<Option<f64>> = line
            .split(',')
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(Some)
                        .map_err(|_| anyhow!("row {}: `{c}` is not a number", i + 1))
                }
            })
            .collect::<Result<_>>()?;
        if row.len() != header.len() {
            bail!(
                "row {} has {} cells, header has {}",
                i + 1,
                row.len(),
                header.len()
            );
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        Table {
            command: "study",
            metadata: BTreeMap::from([("M".to_string(), Value::from(20.0))]),
            columns: vec!["level".into(), "mesh".into(), "err_s=0.5".into()],
            rows: vec![
                vec![Cell::Index(0), Cell::Float(0.1), Cell::Empty],
                vec![Cell::Index(1), Cell::Float(0.05), Cell::Float(1.0 / 3.0)],
            ],
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        assert_eq!(
            csv,
            "level,mesh,err_s=0.5\n0,1.0000000000000001e-1,\n1,5.0000000000000003e-2,3.3333333333333331e-1\n"
        );
        let (h, rows) = parse_csv(&csv).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(rows[1][2], Some(1.0 / 3.0));
        assert_eq!(rows[0][2], None);
    }

    #[test]
    fn json_mirrors_columns() {
        let v: Value = serde_json::from_str(&sample().to_json().unwrap()).unwrap();
        assert_eq!(v["columns"][2], "err_s=0.5");
        assert!(v["rows"][0][2].is_null());
        assert_eq!(v["rows"][1][2].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(v["metadata"]["M"], 20.0);
    }

    #[test]
    fn ragged_csv_is_rejected() {
        assert!(parse_csv("a,b\n1\n").is_err());
        assert!(parse_csv("a\nx\n").is_err());
    }
}
