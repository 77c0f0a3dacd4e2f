//! Declarative chart specifications and chart classification.
//!
//! The accepted document is a strict subset of the usual grammar-of-graphics
//! JSON: `{mark, encoding: {x: {field}, y: {field}, color: {field}?}, data, title?}`.
//! Aggregation is expected to have happened upstream; one row is one mark.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dataset::{ColumnType, DataTable};

#[derive(Debug, Error, PartialEq)]
pub enum ChartError {
    #[error("malformed chart specification: {0}")]
    Malformed(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("unsupported mark `{0}`")]
    UnsupportedMark(String),
    #[error("encoding `{channel}` on field `{field}` has type {found}, expected {expected}")]
    EncodingTypeMismatch {
        channel: String,
        field: String,
        found: ColumnType,
        expected: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkType {
    Bar,
    Line,
    Point,
    Arc,
}

impl MarkType {
    fn parse(name: &str) -> Result<MarkType, ChartError> {
        match name {
            "bar" => Ok(MarkType::Bar),
            "line" => Ok(MarkType::Line),
            "point" | "circle" => Ok(MarkType::Point),
            "arc" => Ok(MarkType::Arc),
            other => Err(ChartError::UnsupportedMark(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ChartClass {
    Bar,
    Line,
    Pie,
    Scatter,
    GroupedBar,
    MultiLine,
}

impl ChartClass {
    pub const ALL: [ChartClass; 6] = [
        ChartClass::Bar,
        ChartClass::Line,
        ChartClass::Pie,
        ChartClass::Scatter,
        ChartClass::GroupedBar,
        ChartClass::MultiLine,
    ];

    /// Grouped bars and multi-line charts hold several category groups.
    pub fn is_complex(self) -> bool {
        matches!(self, ChartClass::GroupedBar | ChartClass::MultiLine)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    pub field: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

/// A validated chart specification. For arcs, `x` is the slice category and
/// `y` the angle measure; the slice category doubles as the color field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub mark: MarkType,
    pub x: Encoding,
    pub y: Encoding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<Encoding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

impl ChartSpec {
    /// Field that splits marks into category groups, if any.
    pub fn category_field(&self) -> Option<&str> {
        match self.mark {
            MarkType::Arc => Some(&self.x.field),
            _ => self.color.as_ref().map(|c| c.field.as_str()),
        }
    }

    pub fn measure(&self) -> &str {
        &self.y.field
    }
}

/// Where the chart's rows come from, as written in the document.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Inline(Vec<Value>),
    Url(String),
    None,
}

/// Extracts the `data` block without validating the rest of the document.
pub fn data_source(doc: &Value) -> DataSource {
    match doc.get("data") {
        Some(data) => {
            if let Some(Value::Array(values)) = data.get("values") {
                DataSource::Inline(values.clone())
            } else if let Some(Value::String(url)) = data.get("url") {
                DataSource::Url(url.clone())
            } else {
                DataSource::None
            }
        }
        None => DataSource::None,
    }
}

fn channel_field(encoding: &Value, channel: &str) -> Result<Option<String>, ChartError> {
    match encoding.get(channel) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => match v.get("field") {
            Some(Value::String(f)) => Ok(Some(f.clone())),
            _ => Err(ChartError::Malformed(format!(
                "encoding.{channel} needs a string `field`"
            ))),
        },
    }
}

fn resolve(table: &DataTable, field: &str) -> Result<Encoding, ChartError> {
    let column = table
        .column(field)
        .ok_or_else(|| ChartError::UnknownField(field.to_string()))?;
    Ok(Encoding {
        field: field.to_string(),
        ty: column.column_type(),
    })
}

fn expect(channel: &str, enc: &Encoding, allowed: &[ColumnType]) -> Result<(), ChartError> {
    if allowed.contains(&enc.ty) {
        Ok(())
    } else {
        Err(ChartError::EncodingTypeMismatch {
            channel: channel.to_string(),
            field: enc.field.clone(),
            found: enc.ty,
            expected: allowed.iter().map(ToString::to_string).collect::<Vec<_>>().join(" or "),
        })
    }
}

/// Validates a chart document against the table it will draw.
pub fn parse_chart_spec(doc: &Value, table: &DataTable) -> Result<ChartSpec, ChartError> {
    let mark_name = match doc.get("mark") {
        Some(Value::String(m)) => m.as_str(),
        Some(Value::Object(m)) => m
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| ChartError::Malformed("mark object needs a `type`".into()))?,
        _ => return Err(ChartError::Malformed("missing `mark`".into())),
    };
    let mark = MarkType::parse(mark_name)?;
    let encoding = doc
        .get("encoding")
        .filter(|e| e.is_object())
        .ok_or_else(|| ChartError::Malformed("missing `encoding` object".into()))?;
    let title = match doc.get("title") {
        Some(Value::String(t)) => Some(t.clone()),
        Some(Value::Object(t)) => t.get("text").and_then(Value::as_str).map(str::to_string),
        _ => None,
    };

    let field = |channel: &str| -> Result<Option<Encoding>, ChartError> {
        channel_field(encoding, channel)?
            .map(|f| resolve(table, &f))
            .transpose()
    };

    use ColumnType::*;
    if mark == MarkType::Arc {
        let mut encs: Vec<(&str, Encoding)> = Vec::new();
        for channel in ["x", "y", "theta", "color"] {
            if let Some(e) = field(channel)? {
                encs.push((channel, e));
            }
        }
        if encs.len() != 2 {
            return Err(ChartError::Malformed(
                "arc marks need exactly two encodings (one categorical, one numerical)".into(),
            ));
        }
        let cat = encs.iter().position(|(_, e)| e.ty == Categorical);
        let num = encs.iter().position(|(_, e)| e.ty == Numerical);
        return match (cat, num) {
            (Some(c), Some(n)) => Ok(ChartSpec {
                mark,
                x: encs[c].1.clone(),
                y: encs[n].1.clone(),
                color: None,
                title,
            }),
            _ => {
                // Report the first channel that breaks the categorical + numerical pairing.
                let (channel, enc) = if cat.is_none() { &encs[0] } else { &encs[1] };
                let expected = if cat.is_none() { Categorical } else { Numerical };
                Err(ChartError::EncodingTypeMismatch {
                    channel: channel.to_string(),
                    field: enc.field.clone(),
                    found: enc.ty,
                    expected: expected.to_string(),
                })
            }
        };
    }

    let x = field("x")?.ok_or_else(|| ChartError::Malformed("missing encoding.x".into()))?;
    let y = field("y")?.ok_or_else(|| ChartError::Malformed("missing encoding.y".into()))?;
    let color = field("color")?;

    match mark {
        MarkType::Bar => expect("x", &x, &[Categorical, Temporal])?,
        MarkType::Line => expect("x", &x, &[Categorical, Temporal, Numerical])?,
        MarkType::Point => expect("x", &x, &[Temporal, Numerical])?,
        MarkType::Arc => unreachable!(),
    }
    expect("y", &y, &[Numerical])?;
    if let Some(c) = &color {
        expect("color", c, &[Categorical])?;
    }
    Ok(ChartSpec {
        mark,
        x,
        y,
        color,
        title,
    })
}

pub fn classify_chart(spec: &ChartSpec) -> ChartClass {
    match (spec.mark, spec.color.is_some()) {
        (MarkType::Bar, false) => ChartClass::Bar,
        (MarkType::Bar, true) => ChartClass::GroupedBar,
        (MarkType::Line, false) => ChartClass::Line,
        (MarkType::Line, true) => ChartClass::MultiLine,
        (MarkType::Point, _) => ChartClass::Scatter,
        (MarkType::Arc, _) => ChartClass::Pie,
    }
}
