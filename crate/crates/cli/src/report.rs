// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Sectioned reports rendered as aligned tables or flat `key = value unit`
//! lines.

use std::fmt::Write;

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned human-readable tables.
    Table,
    /// Flat `key = value unit` lines.
    Kv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Table => "table",
            Format::Kv => "kv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Count(usize),
    Text(String),
}

impl Value {
    fn exact(&self) -> String {
        match self {
            Value::Num(x) => format!("{x:e}"),
            Value::Count(n) => n.to_string(),
            Value::Text(s) => s.clone(),
        }
    }

    fn short(&self) -> String {
        match self {
            Value::Num(x) => {
                let a = x.abs();
                if *x == 0.0 {
                    "0".into()
                } else if (1e-3..1e5).contains(&a) {
                    format!("{x:.6}")
                } else {
                    format!("{x:.6e}")
                }
            }
            other => other.exact(),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(n: usize) -> Self {
        Value::Count(n)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.into())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

/// Column name and unit. Text columns use an empty unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: &'static str,
}

pub fn col(name: impl Into<String>, unit: &'static str) -> Column {
    Column {
        name: name.into(),
        unit,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Block {
    Pairs(Vec<(String, Value, &'static str)>),
    /// Rows keyed by a label, rendered aligned or as `label.column` keys.
    Table {
        columns: Vec<Column>,
        rows: Vec<(String, Vec<Value>)>,
    },
    /// Comma-separated block, identical in both formats.
    Csv {
        columns: Vec<Column>,
        rows: Vec<Vec<Value>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    block: Block,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    sections: Vec<Section>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts a key-value section and returns it for filling.
    pub fn pairs(&mut self, name: &str) -> Pairs<'_> {
        self.sections.push(Section {
            name: name.into(),
            block: Block::Pairs(Vec::new()),
        });
        match &mut self.sections.last_mut().expect("just pushed").block {
            Block::Pairs(v) => Pairs(v),
            _ => unreachable!(),
        }
    }

    pub fn table(&mut self, name: &str, columns: Vec<Column>, rows: Vec<(String, Vec<Value>)>) {
        self.sections.push(Section {
            name: name.into(),
            block: Block::Table { columns, rows },
        });
    }

    pub fn csv(&mut self, name: &str, columns: Vec<Column>, rows: Vec<Vec<Value>>) {
        self.sections.push(Section {
            name: name.into(),
            block: Block::Csv { columns, rows },
        });
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            writeln!(out, "[{}]", s.name).unwrap();
            match (&s.block, format) {
                (Block::Pairs(p), _) => render_pairs(&mut out, p, format),
                (Block::Table { columns, rows }, Format::Kv) => {
                    for (label, values) in rows {
                        for (c, v) in columns.iter().zip(values) {
                            line(&mut out, &format!("{label}.{}", c.name), v, c.unit, true);
                        }
                    }
                }
                (Block::Table { columns, rows }, Format::Table) => render_table(&mut out, columns, rows),
                (Block::Csv { columns, rows }, _) => {
                    let head: Vec<String> = columns
                        .iter()
                        .map(|c| {
                            if c.unit.is_empty() {
                                c.name.clone()
                            } else {
                                format!("{} [{}]", c.name, c.unit)
                            }
                        })
                        .collect();
                    writeln!(out, "{}", head.join(",")).unwrap();
                    for r in rows {
                        let cells: Vec<String> = r.iter().map(Value::exact).collect();
                        writeln!(out, "{}", cells.join(",")).unwrap();
                    }
                }
            }
        }
        out
    }
}

pub struct Pairs<'a>(&'a mut Vec<(String, Value, &'static str)>);

impl Pairs<'_> {
    pub fn add(&mut self, key: impl Into<String>, value: impl Into<Value>, unit: &'static str) -> &mut Self {
        self.0.push((key.into(), value.into(), unit));
        self
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.0.push((key.into(), Value::Text(value.into()), ""));
        self
    }
}

fn line(out: &mut String, key: &str, v: &Value, unit: &str, exact: bool) {
    let value = if exact { v.exact() } else { v.short() };
    if unit.is_empty() {
        writeln!(out, "{key} = {value}").unwrap();
    } else {
        writeln!(out, "{key} = {value} {unit}").unwrap();
    }
}

fn render_pairs(out: &mut String, pairs: &[(String, Value, &'static str)], format: Format) {
    match format {
        Format::Kv => {
            for (k, v, u) in pairs {
                line(out, k, v, u, true);
            }
        }
        Format::Table => {
            let width = pairs.iter().map(|(k, _, _)| k.chars().count()).max().unwrap_or(0);
            for (k, v, u) in pairs {
                let pad = width - k.chars().count();
                let value = v.short();
                if u.is_empty() {
                    writeln!(out, "{k}{} = {value}", " ".repeat(pad)).unwrap();
                } else {
                    writeln!(out, "{k}{} = {value} {u}", " ".repeat(pad)).unwrap();
                }
            }
        }
    }
}

fn render_table(out: &mut String, columns: &[Column], rows: &[(String, Vec<Value>)]) {
    let mut grid: Vec<Vec<String>> = Vec::with_capacity(rows.len() + 1);
    let mut head = vec![String::new()];
    head.extend(columns.iter().map(|c| {
        if c.unit.is_empty() {
            c.name.clone()
        } else {
            format!("{} [{}]", c.name, c.unit)
        }
    }));
    grid.push(head);
    for (label, values) in rows {
        let mut r = vec![label.clone()];
        r.extend(values.iter().map(Value::short));
        grid.push(r);
    }
    let ncol = columns.len() + 1;
    let widths: Vec<usize> = (0..ncol)
        .map(|j| {
            grid.iter()
                .map(|r| r.get(j).map_or(0, |s| s.chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    for r in &grid {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let pad = widths[j] - s.chars().count();
                if j == 0 {
                    format!("{s}{}", " ".repeat(pad))
                } else {
                    format!("{}{s}", " ".repeat(pad))
                }
            })
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
    }
}
