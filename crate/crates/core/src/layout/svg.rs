use std::fmt::Write;

use super::{arc_point, Scale, SceneGraph, Shape};
use crate::dataset::format_number;

fn f2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn arc_path(cx: f64, cy: f64, r: f64, start: f64, end: f64) -> String {
    let sweep = end - start;
    if sweep >= std::f64::consts::TAU - 1e-9 {
        // A full circle cannot be drawn with a single arc command.
        let top = arc_point(cx, cy, r, 0.0);
        let bottom = arc_point(cx, cy, r, std::f64::consts::PI);
        return format!(
            "M{},{} A{},{} 0 1 1 {},{} A{},{} 0 1 1 {},{} Z",
            f2(top.x),
            f2(top.y),
            f2(r),
            f2(r),
            f2(bottom.x),
            f2(bottom.y),
            f2(r),
            f2(r),
            f2(top.x),
            f2(top.y)
        );
    }
    let a = arc_point(cx, cy, r, start);
    let b = arc_point(cx, cy, r, end);
    let large = if sweep > std::f64::consts::PI { 1 } else { 0 };
    format!(
        "M{},{} L{},{} A{},{} 0 {} 1 {},{} Z",
        f2(cx),
        f2(cy),
        f2(a.x),
        f2(a.y),
        f2(r),
        f2(r),
        large,
        f2(b.x),
        f2(b.y)
    )
}

/// Renders the scene as a standalone SVG 1.1 document.
///
/// Output is a pure function of the scene: coordinates use fixed two-decimal
/// formatting and nothing time- or environment-dependent is emitted. Every
/// data mark carries `data-row` with its row id.
pub fn render_svg(scene: &SceneGraph) -> String {
    let vp = &scene.viewport;
    let plot = scene.plot_area();
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = f2(vp.width),
        h = f2(vp.height)
    );
    let _ = writeln!(
        out,
        r##"<rect class="background" x="0.00" y="0.00" width="{}" height="{}" fill="#ffffff"/>"##,
        f2(vp.width),
        f2(vp.height)
    );
    if let Some(title) = &scene.title {
        let _ = writeln!(
            out,
            r#"<text class="title" x="{}" y="{}" font-size="14" font-weight="bold">{}</text>"#,
            f2(plot.x),
            f2(vp.margins.top / 2.0 + 5.0),
            escape(title)
        );
    }

    let bottom = plot.y + plot.height;
    if let Some(x_scale) = &scene.x_scale {
        let _ = writeln!(out, r#"<g class="axis x-axis">"#);
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333333"/>"##,
            f2(plot.x),
            f2(bottom),
            f2(plot.x + plot.width),
            f2(bottom)
        );
        let ticks: Vec<(f64, String)> = match x_scale {
            Scale::Band(b) => (0..b.len()).map(|i| (b.band_center(i), b.labels[i].clone())).collect(),
            Scale::Linear(s) => s.ticks(6).into_iter().map(|t| (s.apply(t), format_number(t))).collect(),
        };
        for (x, label) in ticks {
            let _ = writeln!(
                out,
                r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#333333"/><text x="{x}" y="{ty}" text-anchor="middle">{label}</text>"##,
                x = f2(x),
                y0 = f2(bottom),
                y1 = f2(bottom + 5.0),
                ty = f2(bottom + 18.0),
                label = escape(&label)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    if let Some(y_scale) = &scene.y_scale {
        let _ = writeln!(out, r#"<g class="axis y-axis">"#);
        let _ = writeln!(
            out,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333333"/>"##,
            f2(plot.y),
            f2(bottom),
            x = f2(plot.x)
        );
        for t in y_scale.ticks(5) {
            let y = y_scale.apply(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#333333"/><text x="{tx}" y="{ty}" text-anchor="end">{label}</text>"##,
                x0 = f2(plot.x - 5.0),
                x1 = f2(plot.x),
                y = f2(y),
                tx = f2(plot.x - 7.0),
                ty = f2(y + 4.0),
                label = escape(&format_number(t))
            );
        }
        let _ = writeln!(out, "</g>");
    }

    let vertices: Vec<(&str, f64, f64, &str)> = scene
        .marks
        .iter()
        .filter_map(|m| match &m.shape {
            Shape::LineVertex { x, y, series } => Some((series.as_str(), *x, *y, m.color.as_str())),
            _ => None,
        })
        .collect();
    if !vertices.is_empty() {
        let _ = writeln!(out, r#"<g class="lines">"#);
        let mut i = 0;
        while i < vertices.len() {
            let series = vertices[i].0;
            let mut d = String::new();
            let mut j = i;
            while j < vertices.len() && vertices[j].0 == series {
                let _ = write!(
                    d,
                    "{}{},{}",
                    if j == i { "M" } else { " L" },
                    f2(vertices[j].1),
                    f2(vertices[j].2)
                );
                j += 1;
            }
            let _ = writeln!(
                out,
                r#"<path class="series" data-series="{}" d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
                escape(series),
                d,
                vertices[i].3
            );
            i = j;
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(out, r#"<g class="marks">"#);
    for mark in &scene.marks {
        let row = mark.row;
        let color = &mark.color;
        let _ = match &mark.shape {
            Shape::Rect { x, y, width, height } => writeln!(
                out,
                r#"<rect data-row="{row}" x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
                f2(*x),
                f2(*y),
                f2(*width),
                f2(*height)
            ),
            Shape::Point { cx, cy, r } => writeln!(
                out,
                r#"<circle data-row="{row}" cx="{}" cy="{}" r="{}" fill="{color}" fill-opacity="0.8"/>"#,
                f2(*cx),
                f2(*cy),
                f2(*r)
            ),
            Shape::LineVertex { x, y, .. } => writeln!(
                out,
                r#"<circle data-row="{row}" cx="{}" cy="{}" r="3.00" fill="{color}"/>"#,
                f2(*x),
                f2(*y)
            ),
            Shape::ArcSlice {
                cx,
                cy,
                r,
                start_angle,
                end_angle,
            } => writeln!(
                out,
                r##"<path data-row="{row}" d="{}" fill="{color}" stroke="#ffffff"/>"##,
                arc_path(*cx, *cy, *r, *start_angle, *end_angle)
            ),
        };
    }
    let _ = writeln!(out, "</g>");

    if !scene.legend.is_empty() {
        let _ = writeln!(out, r#"<g class="legend">"#);
        for entry in &scene.legend {
            let b = entry.label_box;
            let _ = writeln!(
                out,
                r#"<g class="legend-entry" data-category="{cat}"><rect x="{}" y="{}" width="10.00" height="10.00" fill="{}"/><text x="{}" y="{}">{cat}</text></g>"#,
                f2(b.x),
                f2(b.y + 3.0),
                entry.color,
                f2(b.x + 14.0),
                f2(b.y + 12.0),
                cat = escape(&entry.category)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}
