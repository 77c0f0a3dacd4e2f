//! Deterministic chart layout.
//!
//! [`layout_chart`] turns a validated [`ChartSpec`] into a [`SceneGraph`]:
//! every drawn row becomes one [`Mark`] with canvas geometry, and category
//! charts get legend entries with label boxes. The same scene backs hit
//! testing and SVG output, so what is drawn is exactly what is selectable.

mod scale;
mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::{classify_chart, ChartClass, ChartSpec, MarkType};
use crate::dataset::{Cell, ColumnType, DataTable};
use crate::geometry::{Point, Rect};

pub use scale::{BandScale, LinearScale, Scale};
pub use svg::render_svg;

/// Distinct temporal values up to which bars sit on a band scale.
pub const MAX_TEMPORAL_BANDS: usize = 50;

pub const PALETTE: [&str; 10] = [
    "#4c78a8", "#f58518", "#e45756", "#72b7b2", "#54a24b", "#eeca3b", "#b279a2", "#ff9da6", "#9d755d", "#bab0ac",
];

const POINT_RADIUS: f64 = 4.0;
const LEGEND_SWATCH: f64 = 10.0;
const LEGEND_CHAR_WIDTH: f64 = 7.0;
const LEGEND_GAP: f64 = 12.0;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("viewport leaves no plot area")]
    InvalidViewport,
    #[error("row {row} has negative value {value}; bars and slices start at zero")]
    NegativeValue { row: usize, value: f64 },
    #[error("pie slices sum to zero")]
    ZeroTotal,
    #[error("position {0} is outside the plot area")]
    OutOfPlotArea(f64),
    #[error("chart has no x axis")]
    NoXAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
    pub left: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub width: f64,
    pub height: f64,
    pub margins: Margins,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport::with_size(640.0, 400.0)
    }
}

impl Viewport {
    pub fn with_size(width: f64, height: f64) -> Viewport {
        Viewport {
            width,
            height,
            margins: Margins {
                top: 40.0,
                right: 40.0,
                bottom: 40.0,
                left: 40.0,
            },
        }
    }

    pub fn plot_area(&self) -> Rect {
        Rect::new(
            self.margins.left,
            self.margins.top,
            self.width - self.margins.left - self.margins.right,
            self.height - self.margins.top - self.margins.bottom,
        )
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }
}

/// An x value as it appears in the data: numeric (numbers, years, dates)
/// or a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XValue {
    Num(f64),
    Text(String),
}

impl XValue {
    fn from_cell(cell: &Cell) -> Option<XValue> {
        match cell {
            Cell::Missing => None,
            Cell::Text(s) => Some(XValue::Text(s.clone())),
            other => other.as_f64().map(XValue::Num),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            XValue::Num(v) => Some(*v),
            XValue::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Shape {
    Rect {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    Point {
        cx: f64,
        cy: f64,
        r: f64,
    },
    #[serde(rename_all = "camelCase")]
    ArcSlice {
        cx: f64,
        cy: f64,
        r: f64,
        start_angle: f64,
        end_angle: f64,
    },
    LineVertex {
        x: f64,
        y: f64,
        series: String,
    },
}

impl Shape {
    /// Representative point used when matching a stroke against a group:
    /// bar top-center, vertex, point center, or slice centroid direction.
    pub fn anchor(&self) -> Point {
        match *self {
            Shape::Rect { x, y, width, .. } => Point::new(x + width / 2.0, y),
            Shape::Point { cx, cy, .. } => Point::new(cx, cy),
            Shape::LineVertex { x, y, .. } => Point::new(x, y),
            Shape::ArcSlice {
                cx,
                cy,
                r,
                start_angle,
                end_angle,
            } => arc_point(cx, cy, r / 2.0, (start_angle + end_angle) / 2.0),
        }
    }
}

/// Point on a circle for an angle measured clockwise from twelve o'clock.
pub fn arc_point(cx: f64, cy: f64, r: f64, angle: f64) -> Point {
    Point::new(cx + r * angle.sin(), cy - r * angle.cos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mark {
    pub row: usize,
    pub shape: Shape,
    pub color: String,
    pub x: XValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LegendEntry {
    pub category: String,
    pub label_box: Rect,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneGraph {
    pub chart_class: ChartClass,
    pub viewport: Viewport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub x_field: String,
    pub y_field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_scale: Option<Scale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_scale: Option<LinearScale>,
    pub marks: Vec<Mark>,
    pub legend: Vec<LegendEntry>,
}

/// Result of mapping a canvas x coordinate back into the data domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XPosition {
    Value(f64),
    Band(usize),
}

impl SceneGraph {
    pub fn plot_area(&self) -> Rect {
        self.viewport.plot_area()
    }

    pub fn invert_x(&self, px: f64) -> Result<XPosition, LayoutError> {
        let scale = self.x_scale.as_ref().ok_or(LayoutError::NoXAxis)?;
        let plot = self.plot_area();
        if !(px >= plot.x && px <= plot.x + plot.width) {
            return Err(LayoutError::OutOfPlotArea(px));
        }
        match scale {
            Scale::Linear(s) => Ok(XPosition::Value(s.invert(px))),
            Scale::Band(b) => b.index_at(px).map(XPosition::Band).ok_or(LayoutError::NoXAxis),
        }
    }

    /// Marks are usually emitted in row order, so a binary search hits first.
    pub fn mark_for_row(&self, row: usize) -> Option<&Mark> {
        match self.marks.binary_search_by_key(&row, |m| m.row) {
            Ok(i) => Some(&self.marks[i]),
            Err(_) => self.marks.iter().find(|m| m.row == row),
        }
    }

    pub fn categories(&self) -> Vec<String> {
        self.legend.iter().map(|l| l.category.clone()).collect()
    }
}

/// Inverts a canvas x coordinate; free-function form of [`SceneGraph::invert_x`].
pub fn invert_x(scene: &SceneGraph, px: f64) -> Result<XPosition, LayoutError> {
    scene.invert_x(px)
}

struct Row {
    id: usize,
    x: XValue,
    x_cell: Cell,
    y: f64,
    category: Option<String>,
}

fn drawable_rows(spec: &ChartSpec, table: &DataTable) -> Vec<Row> {
    let category_field = match spec.mark {
        MarkType::Arc => None,
        _ => spec.color.as_ref().map(|c| c.field.as_str()),
    };
    table
        .row_ids()
        .filter_map(|id| {
            let x_cell = table.cell(&spec.x.field, id)?.clone();
            let x = XValue::from_cell(&x_cell)?;
            let y = table.cell(&spec.y.field, id)?.as_f64()?;
            let category = match category_field {
                Some(f) => Some(table.cell(f, id)?.as_text()?.to_string()),
                None => None,
            };
            Some(Row {
                id,
                x,
                x_cell,
                y,
                category,
            })
        })
        .collect()
}

fn first_appearance<T: Clone + PartialEq>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

fn linear_domain(values: impl Iterator<Item = f64>, include_zero: bool) -> [f64; 2] {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if include_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return [0.0, 1.0];
    }
    if lo == hi {
        [lo - 0.5, hi + 0.5]
    } else {
        [lo, hi]
    }
}

/// Ordered distinct x values: numerically for numbers and time, first
/// appearance for category labels.
fn band_domain(rows: &[Row]) -> (Vec<XValue>, Vec<String>) {
    let mut pairs: Vec<(XValue, String)> = first_appearance(rows.iter().map(|r| (r.x.clone(), r.x_cell.label())));
    if pairs.iter().all(|(x, _)| x.as_f64().is_some()) {
        pairs.sort_by(|a, b| a.0.as_f64().unwrap().total_cmp(&b.0.as_f64().unwrap()));
    }
    pairs.into_iter().unzip()
}

fn legend_entries(viewport: &Viewport, categories: &[(String, String)]) -> Vec<LegendEntry> {
    let plot = viewport.plot_area();
    let box_height = 16.0;
    let y = (viewport.margins.top - box_height) / 2.0;
    let widths: Vec<f64> = categories
        .iter()
        .map(|(c, _)| LEGEND_SWATCH + 4.0 + LEGEND_CHAR_WIDTH * c.chars().count() as f64)
        .collect();
    let total: f64 = widths.iter().sum::<f64>() + LEGEND_GAP * categories.len().saturating_sub(1) as f64;
    let mut x = (plot.x + plot.width - total).max(0.0);
    categories
        .iter()
        .zip(widths)
        .map(|((category, color), w)| {
            let entry = LegendEntry {
                category: category.clone(),
                label_box: Rect::new(x, y.max(0.0), w, box_height),
                color: color.clone(),
            };
            x += w + LEGEND_GAP;
            entry
        })
        .collect()
}

/// Lays out a chart in the given viewport.
pub fn layout_chart(spec: &ChartSpec, table: &DataTable, viewport: &Viewport) -> Result<SceneGraph, LayoutError> {
    let plot = viewport.plot_area();
    if !(plot.width > 0.0 && plot.height > 0.0) {
        return Err(LayoutError::InvalidViewport);
    }
    let class = classify_chart(spec);
    let rows = drawable_rows(spec, table);

    let mut scene = SceneGraph {
        chart_class: class,
        viewport: *viewport,
        title: spec.title.clone(),
        x_field: spec.x.field.clone(),
        y_field: spec.y.field.clone(),
        category_field: spec.category_field().map(str::to_string),
        x_scale: None,
        y_scale: None,
        marks: Vec::new(),
        legend: Vec::new(),
    };

    if class == ChartClass::Pie {
        layout_pie(&mut scene, &rows)?;
        return Ok(scene);
    }

    let categories: Vec<String> = first_appearance(rows.iter().filter_map(|r| r.category.clone()));
    let colors: BTreeMap<&str, &str> = categories
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), PALETTE[i % PALETTE.len()]))
        .collect();
    let color_of = |row: &Row| -> String {
        row.category
            .as_deref()
            .and_then(|c| colors.get(c))
            .unwrap_or(&PALETTE[0])
            .to_string()
    };

    let x_range = [plot.x, plot.x + plot.width];
    let is_bar = spec.mark == MarkType::Bar;
    let (x_domain, x_labels) = band_domain(&rows);
    let banded = match spec.x.ty {
        ColumnType::Categorical => true,
        ColumnType::Temporal => is_bar && x_domain.len() <= MAX_TEMPORAL_BANDS,
        ColumnType::Numerical => false,
    };
    if is_bar {
        if let Some(r) = rows.iter().find(|r| r.y < 0.0) {
            return Err(LayoutError::NegativeValue { row: r.id, value: r.y });
        }
    }

    let x_scale = if banded {
        Scale::Band(BandScale::new(x_domain, x_labels, x_range, 0.1, 0.05))
    } else if is_bar {
        // Many temporal bars: pad the linear domain by half a slot so the
        // outermost bars stay inside the plot.
        let [lo, hi] = linear_domain(rows.iter().filter_map(|r| r.x.as_f64()), false);
        let half = if x_domain.len() > 1 {
            (hi - lo) / (x_domain.len() - 1) as f64 / 2.0
        } else {
            0.5
        };
        Scale::Linear(LinearScale::new([lo - half, hi + half], x_range))
    } else {
        let domain = linear_domain(rows.iter().filter_map(|r| r.x.as_f64()), false);
        Scale::Linear(LinearScale::new(domain, x_range))
    };
    let y_scale = LinearScale::new(
        linear_domain(rows.iter().map(|r| r.y), is_bar),
        [plot.y + plot.height, plot.y],
    );

    let mut marks = Vec::with_capacity(rows.len());
    match spec.mark {
        MarkType::Bar => {
            let inner = (class == ChartClass::GroupedBar).then(|| {
                BandScale::new(
                    categories.iter().map(|c| XValue::Text(c.clone())).collect(),
                    categories.clone(),
                    [0.0, 1.0],
                    0.1,
                    0.0,
                )
            });
            let base = y_scale.apply(0.0);
            for row in &rows {
                let (slot_x, slot_w) = match &x_scale {
                    Scale::Band(b) => {
                        let i = b.index_of(&row.x).expect("row x is in the band domain");
                        (b.band_start(i), b.bandwidth)
                    }
                    Scale::Linear(s) => {
                        let w = 0.9 * plot.width / x_domain_len(&rows) as f64;
                        (s.apply(row.x.as_f64().unwrap_or(0.0)) - w / 2.0, w)
                    }
                };
                let (x, width) = match (&inner, &row.category) {
                    (Some(inner), Some(cat)) => {
                        let j = inner
                            .index_of(&XValue::Text(cat.clone()))
                            .expect("category is in the inner domain");
                        (slot_x + inner.band_start(j) * slot_w, inner.bandwidth * slot_w)
                    }
                    _ => (slot_x, slot_w),
                };
                let top = y_scale.apply(row.y);
                marks.push(Mark {
                    row: row.id,
                    shape: Shape::Rect {
                        x,
                        y: top,
                        width,
                        height: base - top,
                    },
                    color: color_of(row),
                    x: row.x.clone(),
                    category: row.category.clone(),
                });
            }
        }
        MarkType::Line => {
            let mut ordered: Vec<&Row> = rows.iter().collect();
            ordered.sort_by(|a, b| {
                a.category
                    .cmp(&b.category)
                    .then(x_scale.position(&a.x).total_cmp(&x_scale.position(&b.x)))
                    .then(a.id.cmp(&b.id))
            });
            for row in ordered {
                marks.push(Mark {
                    row: row.id,
                    shape: Shape::LineVertex {
                        x: x_scale.position(&row.x),
                        y: y_scale.apply(row.y),
                        series: row.category.clone().unwrap_or_default(),
                    },
                    color: color_of(row),
                    x: row.x.clone(),
                    category: row.category.clone(),
                });
            }
        }
        MarkType::Point => {
            for row in &rows {
                marks.push(Mark {
                    row: row.id,
                    shape: Shape::Point {
                        cx: x_scale.position(&row.x),
                        cy: y_scale.apply(row.y),
                        r: POINT_RADIUS,
                    },
                    color: color_of(row),
                    x: row.x.clone(),
                    category: row.category.clone(),
                });
            }
        }
        MarkType::Arc => unreachable!("pie handled above"),
    }

    if spec.color.is_some() {
        let pairs: Vec<(String, String)> = categories
            .iter()
            .map(|c| (c.clone(), colors[c.as_str()].to_string()))
            .collect();
        scene.legend = legend_entries(viewport, &pairs);
    }
    scene.marks = marks;
    scene.x_scale = Some(x_scale);
    scene.y_scale = Some(y_scale);
    Ok(scene)
}

fn x_domain_len(rows: &[Row]) -> usize {
    first_appearance(rows.iter().map(|r| r.x.clone())).len().max(1)
}

fn layout_pie(scene: &mut SceneGraph, rows: &[Row]) -> Result<(), LayoutError> {
    if let Some(r) = rows.iter().find(|r| r.y < 0.0) {
        return Err(LayoutError::NegativeValue { row: r.id, value: r.y });
    }
    let plot = scene.plot_area();
    let categories: Vec<String> = first_appearance(rows.iter().map(|r| r.x_cell.label()));
    let color_of = |label: &str| {
        let i = categories.iter().position(|c| c == label).unwrap_or(0);
        PALETTE[i % PALETTE.len()].to_string()
    };
    let total: f64 = rows.iter().map(|r| r.y).sum();
    if !rows.is_empty() && total <= 0.0 {
        return Err(LayoutError::ZeroTotal);
    }
    let (cx, cy) = (plot.x + plot.width / 2.0, plot.y + plot.height / 2.0);
    let r = 0.45 * plot.width.min(plot.height);
    let full = std::f64::consts::TAU;
    let mut start = 0.0;
    for (i, row) in rows.iter().enumerate() {
        let end = if i + 1 == rows.len() {
            full
        } else {
            start + full * row.y / total
        };
        let label = row.x_cell.label();
        scene.marks.push(Mark {
            row: row.id,
            shape: Shape::ArcSlice {
                cx,
                cy,
                r,
                start_angle: start,
                end_angle: end,
            },
            color: color_of(&label),
            x: row.x.clone(),
            category: Some(label),
        });
        start = end;
    }
    let pairs: Vec<(String, String)> = categories.iter().map(|c| (c.clone(), color_of(c))).collect();
    scene.legend = legend_entries(&scene.viewport, &pairs);
    Ok(())
}
