//! Typed, immutable column store.
//!
//! Tables are built once from row-oriented JSON records or CSV text. Every
//! column gets exactly one [`ColumnType`], inferred from its raw values, and
//! rows keep the index they had in the input as their row id.

use std::collections::HashSet;
use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Share of non-missing values that must parse for a type to be chosen.
pub const PARSE_THRESHOLD: f64 = 0.9;

const TIME_NAME_HINTS: [&str; 7] = ["year", "date", "time", "month", "day", "period", "quarter"];

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("no records in input")]
    EmptyInput,
    #[error("column `{0}` has no non-missing values")]
    AllMissing(String),
    #[error("record {record} does not share the key set of the first record")]
    RaggedRecords { record: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unsupported value in column `{column}`: {detail}")]
    UnsupportedValue { column: String, detail: String },
    #[error("column `{column}` has {found} values, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Temporal,
    Categorical,
    Numerical,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Temporal => "temporal",
            ColumnType::Categorical => "categorical",
            ColumnType::Numerical => "numerical",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    Text(String),
    Year(i32),
    Date(NaiveDate),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Numeric view used for ordering and linear scales. Dates map to a
    /// fractional year so that year-only and full-date cells interleave.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            Cell::Year(y) => Some(f64::from(*y)),
            Cell::Date(d) => {
                let days_in_year = if NaiveDate::from_ymd_opt(d.year(), 2, 29).is_some() {
                    366.0
                } else {
                    365.0
                };
                Some(f64::from(d.year()) + f64::from(d.ordinal0()) / days_in_year)
            }
            Cell::Missing | Cell::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Human-readable rendering used in labels and generated text.
    pub fn label(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            Cell::Number(v) => format_number(*v),
            Cell::Text(s) => s.clone(),
            Cell::Year(y) => y.to_string(),
            Cell::Date(d) => d.format("%Y-%m-%d").to_string(),
        }
    }
}

/// Formats a number for display: integers without a fractional part,
/// everything else with at most two decimals and no trailing zeros.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    ty: ColumnType,
    cells: Vec<Cell>,
}

impl Column {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn column_type(&self) -> ColumnType {
        self.ty
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, row: usize) -> &Cell {
        &self.cells[row]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct DataTable {
    columns: Vec<Column>,
    row_count: usize,
}

impl DataTable {
    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn row_ids(&self) -> std::ops::Range<usize> {
        0..self.row_count
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn cell(&self, column: &str, row: usize) -> Option<&Cell> {
        self.column(column).and_then(|c| c.cells.get(row))
    }

    /// Builds a table from already-typed columns, checking shape invariants.
    pub fn from_columns(columns: Vec<(String, ColumnType, Vec<Cell>)>) -> Result<DataTable, DataError> {
        let row_count = columns.first().map_or(0, |c| c.2.len());
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(columns.len());
        for (name, ty, cells) in columns {
            if !seen.insert(name.clone()) {
                return Err(DataError::DuplicateColumn(name));
            }
            if cells.len() != row_count {
                return Err(DataError::LengthMismatch {
                    column: name,
                    expected: row_count,
                    found: cells.len(),
                });
            }
            for cell in &cells {
                check_cell(&name, ty, cell)?;
            }
            out.push(Column { name, ty, cells });
        }
        Ok(DataTable {
            columns: out,
            row_count,
        })
    }

    /// Serializes back to row-oriented JSON records (missing cells become null).
    pub fn to_records(&self) -> Vec<Value> {
        self.row_ids()
            .map(|row| {
                let mut obj = Map::new();
                for col in &self.columns {
                    obj.insert(col.name.clone(), cell_to_json(&col.cells[row]));
                }
                Value::Object(obj)
            })
            .collect()
    }
}

fn check_cell(column: &str, ty: ColumnType, cell: &Cell) -> Result<(), DataError> {
    let ok = match (ty, cell) {
        (_, Cell::Missing) => true,
        (ColumnType::Numerical, Cell::Number(v)) => v.is_finite(),
        (ColumnType::Categorical, Cell::Text(_)) => true,
        (ColumnType::Temporal, Cell::Year(_) | Cell::Date(_)) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(DataError::UnsupportedValue {
            column: column.to_string(),
            detail: format!("{cell:?} in a {ty} column"),
        })
    }
}

pub fn is_missing_marker(raw: &str) -> bool {
    let t = raw.trim();
    t.is_empty()
        || ["na", "n/a", "null", "none", "nan"]
            .iter()
            .any(|m| t.eq_ignore_ascii_case(m))
}

fn parse_year(raw: &str) -> Option<i32> {
    let t = raw.trim();
    if t.len() == 4 && t.bytes().all(|b| b.is_ascii_digit()) {
        t.parse().ok()
    } else {
        None
    }
}

fn parse_date(raw: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d").ok()
}

fn parse_real(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn name_suggests_time(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    TIME_NAME_HINTS.iter().any(|h| lower.contains(h))
}

/// Picks a column type from raw string values.
///
/// Temporal wins when at least 90% of the present values are ISO dates or
/// four-digit years, provided there is a real date among them or the column
/// name reads as time ("Year", "date", ...). Bare four-digit numbers under a
/// neutral name stay numerical.
pub fn infer_column_type(name: &str, raw_values: &[&str]) -> Result<ColumnType, DataError> {
    let present: Vec<&str> = raw_values.iter().copied().filter(|v| !is_missing_marker(v)).collect();
    if present.is_empty() {
        return Err(DataError::AllMissing(name.to_string()));
    }
    let total = present.len() as f64;
    let dates = present.iter().filter(|v| parse_date(v).is_some()).count();
    let years = present.iter().filter(|v| parse_year(v).is_some()).count();
    let reals = present.iter().filter(|v| parse_real(v).is_some()).count();

    if (dates + years) as f64 >= PARSE_THRESHOLD * total && (dates > 0 || name_suggests_time(name)) {
        Ok(ColumnType::Temporal)
    } else if reals as f64 >= PARSE_THRESHOLD * total {
        Ok(ColumnType::Numerical)
    } else {
        Ok(ColumnType::Categorical)
    }
}

/// Parses one raw value as a cell of the given type; unparseable values
/// become [`Cell::Missing`].
pub fn parse_cell(ty: ColumnType, raw: &str) -> Cell {
    if is_missing_marker(raw) {
        return Cell::Missing;
    }
    match ty {
        ColumnType::Temporal => parse_year(raw)
            .map(Cell::Year)
            .or_else(|| parse_date(raw).map(Cell::Date))
            .unwrap_or(Cell::Missing),
        ColumnType::Numerical => parse_real(raw).map(Cell::Number).unwrap_or(Cell::Missing),
        ColumnType::Categorical => Cell::Text(raw.to_string()),
    }
}

fn json_to_raw(column: &str, value: &Value) -> Result<String, DataError> {
    match value {
        Value::Null => Ok(String::new()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) => Ok(s.clone()),
        Value::Array(_) | Value::Object(_) => Err(DataError::UnsupportedValue {
            column: column.to_string(),
            detail: "nested arrays and objects are not supported".to_string(),
        }),
    }
}

fn build_from_raw(names: Vec<String>, raw: Vec<Vec<String>>) -> Result<DataTable, DataError> {
    let mut columns = Vec::with_capacity(names.len());
    for (name, values) in names.into_iter().zip(raw) {
        let refs: Vec<&str> = values.iter().map(String::as_str).collect();
        let ty = infer_column_type(&name, &refs)?;
        let cells = refs.iter().map(|r| parse_cell(ty, r)).collect();
        columns.push((name, ty, cells));
    }
    DataTable::from_columns(columns)
}

/// Loads row-oriented records. Every record must carry the key set of the
/// first one; row ids follow input order.
pub fn load_table(records: &[Value]) -> Result<DataTable, DataError> {
    let first = records.first().ok_or(DataError::EmptyInput)?;
    let first = first.as_object().ok_or(DataError::RaggedRecords { record: 0 })?;
    let names: Vec<String> = first.keys().cloned().collect();
    let mut raw: Vec<Vec<String>> = vec![Vec::with_capacity(records.len()); names.len()];
    for (i, record) in records.iter().enumerate() {
        let obj = record.as_object().ok_or(DataError::RaggedRecords { record: i })?;
        if obj.len() != names.len() {
            return Err(DataError::RaggedRecords { record: i });
        }
        for (col, name) in names.iter().enumerate() {
            let value = obj.get(name).ok_or(DataError::RaggedRecords { record: i })?;
            raw[col].push(json_to_raw(name, value)?);
        }
    }
    build_from_raw(names, raw)
}

/// Parses a JSON document that is an array of records.
pub fn load_json(text: &str) -> Result<DataTable, DataError> {
    let value: Value = serde_json::from_str(text).map_err(|e| DataError::Json(e.to_string()))?;
    match value {
        Value::Array(records) => load_table(&records),
        _ => Err(DataError::Json("expected an array of records".to_string())),
    }
}

/// Parses CSV text with a header row.
pub fn load_csv(text: &str) -> Result<DataTable, DataError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => DataError::RaggedRecords { record: i },
            _ => DataError::Csv(e.to_string()),
        })?;
        for (col, field) in record.iter().enumerate() {
            raw[col].push(field.to_string());
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(DataError::EmptyInput);
    }
    build_from_raw(names, raw)
}

fn cell_to_json(cell: &Cell) -> Value {
    match cell {
        Cell::Missing => Value::Null,
        Cell::Number(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Year(y) => Value::from(*y),
        Cell::Date(d) => Value::String(d.format("%Y-%m-%d").to_string()),
    }
}

fn json_to_cell(column: &str, ty: ColumnType, value: &Value) -> Result<Cell, DataError> {
    let bad = || DataError::UnsupportedValue {
        column: column.to_string(),
        detail: format!("{value} in a {ty} column"),
    };
    Ok(match (ty, value) {
        (_, Value::Null) => Cell::Missing,
        (ColumnType::Numerical, Value::Number(n)) => Cell::Number(n.as_f64().ok_or_else(bad)?),
        (ColumnType::Categorical, Value::String(s)) => Cell::Text(s.clone()),
        (ColumnType::Temporal, Value::Number(n)) => {
            let y = n.as_i64().ok_or_else(bad)?;
            Cell::Year(i32::try_from(y).map_err(|_| bad())?)
        }
        (ColumnType::Temporal, Value::String(s)) => Cell::Date(parse_date(s).ok_or_else(bad)?),
        _ => return Err(bad()),
    })
}

/// Typed column-oriented wire form; preserves types exactly so a reload
/// never re-runs inference.
#[derive(Serialize, Deserialize)]
struct RawColumn {
    name: String,
    #[serde(rename = "type")]
    ty: ColumnType,
    values: Vec<Value>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    #[serde(rename = "rowCount")]
    row_count: usize,
    columns: Vec<RawColumn>,
}

impl From<DataTable> for RawTable {
    fn from(table: DataTable) -> Self {
        RawTable {
            row_count: table.row_count,
            columns: table
                .columns
                .into_iter()
                .map(|c| RawColumn {
                    values: c.cells.iter().map(cell_to_json).collect(),
                    name: c.name,
                    ty: c.ty,
                })
                .collect(),
        }
    }
}

impl TryFrom<RawTable> for DataTable {
    type Error = DataError;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        let mut columns = Vec::with_capacity(raw.columns.len());
        for col in raw.columns {
            let cells = col
                .values
                .iter()
                .map(|v| json_to_cell(&col.name, col.ty, v))
                .collect::<Result<Vec<_>, _>>()?;
            columns.push((col.name, col.ty, cells));
        }
        let table = DataTable::from_columns(columns)?;
        if !table.columns.is_empty() && table.row_count != raw.row_count {
            return Err(DataError::LengthMismatch {
                column: table.columns[0].name.clone(),
                expected: raw.row_count,
                found: table.row_count,
            });
        }
        Ok(DataTable {
            row_count: raw.row_count,
            ..table
        })
    }
}
