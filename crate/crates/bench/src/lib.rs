//! Chart fixtures shared by the benchmarks.

use serde_json::{json, Value};
use sketchdoc::geometry::Point;
use sketchdoc::layout::Viewport;
use sketchdoc::PreparedChart;

/// A multi-series chart document with `series` lines of `points` values each.
/// Values follow a fixed integer recurrence so runs are comparable.
pub fn multi_series_doc(mark: &str, series: usize, points: usize) -> Value {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut records = Vec::with_capacity(series * points);
    for s in 0..series {
        for i in 0..points {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            let value = (state >> 33) % 1000;
            records.push(json!({"Year": 1900 + i, "Series": format!("S{s}"), "Value": value}));
        }
    }
    json!({
        "title": "Benchmark",
        "mark": mark,
        "encoding": {"x": {"field": "Year"}, "y": {"field": "Value"}, "color": {"field": "Series"}},
        "data": {"values": records}
    })
}

pub fn prepare(doc: &Value) -> PreparedChart {
    PreparedChart::new(doc, None, &Viewport::default()).expect("benchmark chart lays out")
}

/// An open stroke through the drawn vertices of one series.
pub fn trace(chart: &PreparedChart, series: &str) -> Vec<Point> {
    let mut points: Vec<Point> = chart
        .scene
        .marks
        .iter()
        .filter(|m| m.category.as_deref() == Some(series))
        .map(|m| m.shape.anchor())
        .collect();
    points.sort_by(|a, b| a.x.total_cmp(&b.x));
    points.into_iter().map(|p| Point::new(p.x, p.y + 1.5)).collect()
}

/// A rectangular lasso around the whole plot area.
pub fn plot_lasso(chart: &PreparedChart) -> Vec<Point> {
    let r = chart.scene.plot_area();
    let (x0, y0, x1, y1) = (r.x + 1.0, r.y + 1.0, r.x + r.width - 1.0, r.y + r.height - 1.0);
    vec![
        Point::new(x0, y0),
        Point::new(x1, y0),
        Point::new(x1, y1),
        Point::new(x0, y1),
        Point::new(x0, y0),
    ]
}
