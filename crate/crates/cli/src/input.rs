//! Reading chart, data, stroke and intent files.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sketchdoc::chart::{data_source, DataSource};
use sketchdoc::dataset::load_csv;
use sketchdoc::geometry::Point;
use sketchdoc::{PreparedChart, Viewport};

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Records from a `.csv` file or a JSON array of objects.
pub fn read_records(path: &Path) -> Result<Vec<Value>, CliError> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let table = load_csv(&read_text(path)?).map_err(|e| parse_error(path, e.to_string()))?;
        return Ok(table.to_records());
    }
    match read_json(path)? {
        Value::Array(records) => Ok(records),
        _ => Err(parse_error(path, "expected an array of records")),
    }
}

/// Loads and lays out a chart. Without `--data`, a `data.url` is resolved
/// next to the chart file.
pub fn load_chart(chart: &Path, data: Option<&Path>, viewport: &Viewport) -> Result<PreparedChart, CliError> {
    let doc = read_json(chart)?;
    let records = match data {
        Some(path) => Some(read_records(path)?),
        None => match data_source(&doc) {
            DataSource::Url(url) => {
                let base = chart.parent().map_or_else(PathBuf::new, Path::to_path_buf);
                Some(read_records(&base.join(url))?)
            }
            DataSource::Inline(_) | DataSource::None => None,
        },
    };
    PreparedChart::new(&doc, records, viewport).map_err(|source| CliError::Pipeline {
        context: chart.display().to_string(),
        source,
    })
}

/// The list under `key`, or the document itself when it is a bare array.
fn entries(doc: Value, key: &str, path: &Path) -> Result<Vec<Value>, CliError> {
    match doc {
        Value::Array(items) => Ok(items),
        Value::Object(mut map) => match map.remove(key) {
            Some(Value::Array(items)) => Ok(items),
            _ => Err(parse_error(path, format!("expected a `{key}` array"))),
        },
        _ => Err(parse_error(path, format!("expected a `{key}` array"))),
    }
}

/// Recorded strokes: `{"strokes": [{"points": [[x, y], ...]}, ...]}`; a
/// stroke may also be a bare point list.
pub fn read_strokes(path: &Path) -> Result<Vec<Vec<Point>>, CliError> {
    entries(read_json(path)?, "strokes", path)?
        .into_iter()
        .enumerate()
        .map(|(i, stroke)| {
            let points = match stroke {
                Value::Object(mut map) => map.remove("points").unwrap_or(Value::Null),
                other => other,
            };
            serde_json::from_value(points).map_err(|e| parse_error(path, format!("stroke {}: {e}", i + 1)))
        })
        .collect()
}

/// Intent documents: `{"intents": [...]}` or a bare array.
pub fn read_intents(path: &Path) -> Result<Vec<Value>, CliError> {
    entries(read_json(path)?, "intents", path)
}
