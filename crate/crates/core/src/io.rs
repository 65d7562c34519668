//! Reading numeric columns from CSV, TSV, whitespace text, JSON and Markdown tables.
//!
//! The format follows the file extension. Cells are kept as strings until a
//! column is coerced; coercion accepts integers, decimals and scientific
//! notation with a `.` decimal point, and rejects non-finite values.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};
use crate::sample::Sample;

/// Share of non-empty cells that must be numeric for automatic column selection.
pub const NUMERIC_COLUMN_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Tsv,
    Txt,
    Json,
    Markdown,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Format> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "csv" => Ok(Format::Csv),
            "tsv" => Ok(Format::Tsv),
            "txt" => Ok(Format::Txt),
            "json" => Ok(Format::Json),
            "md" => Ok(Format::Markdown),
            other => Err(Error::invalid(
                "path",
                format!("unrecognized file extension {other:?} (expected csv, tsv, txt, json or md)"),
            )),
        }
    }
}

/// Named columns of raw string cells, all the same length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    column_names: Vec<String>,
    columns: Vec<Vec<String>>,
}

impl Table {
    /// Builds a table from a header and rows. Short rows are padded with empty
    /// cells, long rows truncated, and repeated names suffixed `_2`, `_3`, ...
    pub fn from_rows(header: Vec<String>, rows: Vec<Vec<String>>) -> Table {
        let mut seen = HashSet::new();
        let column_names: Vec<String> = header
            .into_iter()
            .map(|name| {
                let base = name.trim().to_string();
                let mut name = base.clone();
                let mut i = 2;
                while !seen.insert(name.clone()) {
                    name = format!("{base}_{i}");
                    i += 1;
                }
                name
            })
            .collect();
        let mut columns = vec![Vec::with_capacity(rows.len()); column_names.len()];
        for row in rows {
            for (j, col) in columns.iter_mut().enumerate() {
                col.push(row.get(j).cloned().unwrap_or_default());
            }
        }
        Table { column_names, columns }
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column(&self, name: &str) -> Option<&[String]> {
        let name = name.trim();
        self.column_names
            .iter()
            .position(|c| c == name)
            .map(|j| self.columns[j].as_slice())
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.column_names.iter().zip(&self.columns)
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Numbers in a column plus counts of the cells that were not.
#[derive(Debug, Clone, PartialEq)]
struct Coerced {
    values: Vec<f64>,
    non_empty: usize,
    dropped: usize,
}

fn coerce(cells: &[String]) -> Coerced {
    let mut values = Vec::with_capacity(cells.len());
    let mut non_empty = 0;
    for cell in cells.iter().filter(|c| !c.trim().is_empty()) {
        non_empty += 1;
        if let Some(v) = parse_number(cell) {
            values.push(v);
        }
    }
    Coerced {
        dropped: non_empty - values.len(),
        values,
        non_empty,
    }
}

impl Coerced {
    fn mostly_numeric(&self) -> bool {
        !self.values.is_empty()
            && self.values.len() as f64 >= NUMERIC_COLUMN_FRACTION * self.non_empty as f64
    }
}

/// A numeric column read from a table.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericColumn {
    pub name: String,
    pub sample: Sample,
    /// Non-empty cells that did not parse as finite numbers.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadRequest {
    pub path: PathBuf,
    pub column: Option<String>,
    pub return_all: bool,
}

impl ReadRequest {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        ReadRequest {
            path: path.into(),
            column: None,
            return_all: false,
        }
    }

    pub fn column(mut self, name: impl Into<String>) -> Self {
        self.column = Some(name.into());
        self
    }

    pub fn all(mut self) -> Self {
        self.return_all = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSet {
    Single(NumericColumn),
    All(Vec<NumericColumn>),
}

impl DataSet {
    /// The single column, or the first of several.
    pub fn first(&self) -> &NumericColumn {
        match self {
            DataSet::Single(c) => c,
            DataSet::All(cs) => &cs[0],
        }
    }

    pub fn into_columns(self) -> Vec<NumericColumn> {
        match self {
            DataSet::Single(c) => vec![c],
            DataSet::All(cs) => cs,
        }
    }
}

fn too_few(name: &str, got: usize) -> Error {
    Error::DegenerateSample(format!(
        "fewer than 2 numeric values in column {name:?} (found {got})"
    ))
}

/// Picks numeric columns from a parsed table per `column` and `return_all`.
pub fn select_columns(table: &Table, column: Option<&str>, return_all: bool) -> Result<DataSet> {
    let build = |name: &str, c: Coerced| -> Result<NumericColumn> {
        if c.values.len() < 2 {
            return Err(too_few(name, c.values.len()));
        }
        Ok(NumericColumn {
            name: name.to_string(),
            sample: Sample::new(c.values)?,
            dropped: c.dropped,
        })
    };
    if let Some(name) = column {
        let cells = table.column(name).ok_or_else(|| {
            Error::invalid(
                "column",
                format!("{name:?} not found (available: {})", table.column_names().join(", ")),
            )
        })?;
        return Ok(DataSet::Single(build(name.trim(), coerce(cells))?));
    }
    let mut picked = Vec::new();
    let mut short = None;
    for (name, cells) in table.iter() {
        let c = coerce(cells);
        if !c.mostly_numeric() {
            continue;
        }
        if c.values.len() < 2 {
            short.get_or_insert((name, c.values.len()));
            continue;
        }
        picked.push(build(name, c)?);
        if !return_all {
            break;
        }
    }
    if picked.is_empty() {
        if let Some((name, got)) = short {
            return Err(too_few(name, got));
        }
        return Err(Error::invalid(
            "column",
            "no numeric column (need at least 90% numeric cells)",
        ));
    }
    Ok(if return_all {
        DataSet::All(picked)
    } else {
        DataSet::Single(picked.remove(0))
    })
}

/// Reads the requested numeric column(s) from a file.
pub fn read_data(req: &ReadRequest) -> Result<DataSet> {
    let format = Format::from_path(&req.path)?;
    let text = std::fs::read_to_string(&req.path).map_err(|e| Error::Read {
        path: req.path.display().to_string(),
        reason: e.to_string(),
    })?;
    let table = parse_table(&text, format)?;
    select_columns(&table, req.column.as_deref(), req.return_all)
}

pub fn parse_table(text: &str, format: Format) -> Result<Table> {
    match format {
        Format::Csv => parse_delimited(text, b',', true),
        Format::Tsv => parse_delimited(text, b'\t', false),
        Format::Txt => parse_text(text),
        Format::Json => parse_json(text),
        Format::Markdown => parse_markdown_table(text),
    }
}

fn parse_delimited(text: &str, delimiter: u8, quoting: bool) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .quoting(quoting)
        .flexible(true)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| Error::Parse {
        line: e.position().map(|p| p.line() as usize),
        reason: e.to_string(),
    };
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(csv_err)?.iter().map(String::from).collect());
    }
    Ok(Table::from_rows(header, rows))
}

fn parse_text(text: &str) -> Result<Table> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(String::from)
                .collect::<Vec<_>>()
        })
        .peekable();
    let Some(first) = lines.peek() else {
        return Ok(Table::default());
    };
    let header = if first.iter().all(|t| parse_number(t).is_none()) {
        lines.next().unwrap_or_default()
    } else {
        (1..=first.len()).map(|j| format!("column{j}")).collect()
    };
    Ok(Table::from_rows(header, lines.collect()))
}

fn json_cell(v: &Value) -> Result<String> {
    match v {
        Value::Null => Ok(String::new()),
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Array(_) | Value::Object(_) => Err(Error::Parse {
            line: None,
            reason: "nested JSON values are not table cells".into(),
        }),
    }
}

/// Accepts a flat array of values, an array of objects, or an object of arrays.
fn parse_json(text: &str) -> Result<Table> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        reason: e.to_string(),
    })?;
    let shape_err = || Error::Parse {
        line: None,
        reason: "expected an array of values, an array of objects, or an object of arrays".into(),
    };
    match root {
        Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
            let mut header: Vec<String> = Vec::new();
            for item in &items {
                for key in item.as_object().into_iter().flat_map(|o| o.keys()) {
                    if !header.contains(key) {
                        header.push(key.clone());
                    }
                }
            }
            let rows = items
                .iter()
                .map(|item| {
                    header
                        .iter()
                        .map(|k| item.get(k).map_or(Ok(String::new()), json_cell))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::from_rows(header, rows))
        }
        Value::Array(items) => {
            let rows = items
                .iter()
                .map(|v| json_cell(v).map(|c| vec![c]))
                .collect::<Result<Vec<_>>>()?;
            Ok(Table::from_rows(vec!["value".into()], rows))
        }
        Value::Object(map) => {
            let header: Vec<String> = map.keys().cloned().collect();
            let mut cols = Vec::with_capacity(map.len());
            for v in map.values() {
                let arr = v.as_array().ok_or_else(shape_err)?;
                cols.push(arr.iter().map(json_cell).collect::<Result<Vec<_>>>()?);
            }
            let n = cols.iter().map(Vec::len).max().unwrap_or(0);
            let rows = (0..n)
                .map(|i| cols.iter().map(|c| c.get(i).cloned().unwrap_or_default()).collect())
                .collect();
            Ok(Table::from_rows(header, rows))
        }
        _ => Err(shape_err()),
    }
}

/// Splits a pipe-table row into trimmed cells, honoring `\|` escapes.
fn split_row(line: &str) -> Vec<String> {
    let mut s = line.trim();
    s = s.strip_prefix('|').unwrap_or(s);
    if s.ends_with('|') && !s.ends_with("\\|") {
        s = &s[..s.len() - 1];
    }
    let mut cells = Vec::new();
    let mut cell = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cell.push('|');
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cell).trim().to_string()),
            _ => cell.push(c),
        }
    }
    cells.push(cell.trim().to_string());
    cells
}

fn is_delimiter_cell(cell: &str) -> bool {
    let body = cell.strip_prefix(':').unwrap_or(cell);
    let body = body.strip_suffix(':').unwrap_or(body);
    !body.is_empty() && body.chars().all(|c| c == '-')
}

/// Parses the first pipe table in `text`.
pub fn parse_markdown_table(text: &str) -> Result<Table> {
    let mut lines = text.lines().enumerate().skip_while(|(_, l)| !l.contains('|'));
    let Some((_, header_line)) = lines.next() else {
        return Err(Error::Parse {
            line: None,
            reason: "no table header row".into(),
        });
    };
    let header = split_row(header_line);
    let (delim_no, delim_line) = lines.next().ok_or(Error::Parse {
        line: None,
        reason: "missing delimiter row".into(),
    })?;
    let delim = split_row(delim_line);
    if !delim.iter().all(|c| is_delimiter_cell(c)) {
        return Err(Error::Parse {
            line: Some(delim_no + 1),
            reason: format!("malformed delimiter row {:?}", delim_line.trim()),
        });
    }
    if delim.len() != header.len() {
        return Err(Error::Parse {
            line: Some(delim_no + 1),
            reason: format!(
                "delimiter row has {} cells, header has {}",
                delim.len(),
                header.len()
            ),
        });
    }
    let rows: Vec<Vec<String>> = lines
        .map(|(_, l)| l)
        .take_while(|l| !l.trim().is_empty() && l.contains('|'))
        .map(split_row)
        .collect();
    if rows.is_empty() {
        return Err(Error::Parse {
            line: Some(delim_no + 2),
            reason: "table has no data rows".into(),
        });
    }
    Ok(Table::from_rows(header, rows))
}
