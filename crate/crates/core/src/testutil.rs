//! Shared fixtures for unit tests.

use serde_json::json;

use crate::chart::{parse_chart_spec, ChartSpec};
use crate::dataset::{load_json, DataTable};
use crate::geometry::Point;
use crate::layout::{layout_chart, SceneGraph, Shape, Viewport};

pub const MOVIES: &str = include_str!("../../../fixtures/movies/data.json");

pub fn movies() -> (ChartSpec, DataTable, SceneGraph) {
    let table = load_json(MOVIES).unwrap();
    let doc = json!({
        "title": "Movies released per year",
        "mark": "bar",
        "encoding": {"x": {"field": "Year"}, "y": {"field": "Count"}, "color": {"field": "Genre"}}
    });
    let spec = parse_chart_spec(&doc, &table).unwrap();
    let scene = layout_chart(&spec, &table, &Viewport::default()).unwrap();
    (spec, table, scene)
}

/// Axis-aligned lasso around the given rows' marks, padded by `pad` pixels.
pub fn lasso_around(scene: &SceneGraph, rows: &[usize], pad: f64) -> Vec<Point> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &row in rows {
        let m = scene.mark_for_row(row).unwrap();
        let (a, b, c, d) = match m.shape {
            Shape::Rect { x, y, width, height } => (x, y, x + width, y + height),
            Shape::Point { cx, cy, r } => (cx - r, cy - r, cx + r, cy + r),
            Shape::LineVertex { x, y, .. } => (x, y, x, y),
            Shape::ArcSlice { cx, cy, .. } => (cx, cy, cx, cy),
        };
        x0 = x0.min(a);
        y0 = y0.min(b);
        x1 = x1.max(c);
        y1 = y1.max(d);
    }
    let (x0, y0, x1, y1) = (x0 - pad, y0 - pad, x1 + pad, y1 + pad);
    vec![
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
        Point::new(x0, y0),
    ]
}

/// Open stroke through the anchors of the given rows, in the given order.
pub fn trace(scene: &SceneGraph, rows: &[usize], dy: f64) -> Vec<Point> {
    rows.iter()
        .map(|&r| {
            let a = scene.mark_for_row(r).unwrap().shape.anchor();
            Point::new(a.x, a.y + dy)
        })
        .collect()
}
