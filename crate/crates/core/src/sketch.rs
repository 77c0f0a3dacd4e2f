//! Sketch identification: decide whether a stroke is a lasso (closed) or a
//! trace (open), then resolve it against a laid-out chart.
//!
//! Closed strokes select every mark they contain or touch, or whole legend
//! categories when only legend labels are circled. Open strokes select an x
//! range on simple charts; on grouped bars and multi-line charts they also
//! pick the category group whose anchors lie closest, on average, to the stroke.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::ChartClass;
use crate::geometry::{
    avg_min_distance, point_in_polygon, point_segment_distance, polyline_length, ring_edges, segments_intersect, Point,
    Rect,
};
use crate::layout::{arc_point, LayoutError, Mark, Scale, SceneGraph, Shape, XPosition};

#[derive(Debug, Error, PartialEq)]
pub enum SketchError {
    #[error("stroke is too short ({length:.1}px); treated as a tap")]
    TooShort { length: f64 },
    #[error("sketch selects no data items")]
    EmptySelection,
    #[error("open strokes have no x range on a pie chart; draw a closed path instead")]
    OpenPathOnPie,
    #[error("stroke point ({x}, {y}) lies outside the canvas")]
    OutOfViewport { x: f64, y: f64 },
    #[error("expected a {expected:?} path")]
    WrongKind { expected: PathKind },
    #[error("open-path group matching needs a grouped bar or multi-line chart, got {0:?}")]
    NotGrouped(ChartClass),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// A freehand stroke in scene canvas coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSketch")]
pub struct SketchPath {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    pub points: Vec<Point>,
}

#[derive(Deserialize)]
struct RawSketch {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    color: Option<String>,
    points: Vec<Point>,
}

impl From<RawSketch> for SketchPath {
    fn from(raw: RawSketch) -> Self {
        let mut path = SketchPath::new(raw.points);
        path.id = raw.id;
        path.color = raw.color;
        path
    }
}

impl SketchPath {
    /// Builds a path, collapsing consecutive duplicate points.
    pub fn new(points: Vec<Point>) -> SketchPath {
        let mut out: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
        SketchPath {
            id: None,
            color: None,
            points: out,
        }
    }

    pub fn reversed(&self) -> SketchPath {
        let mut rev = self.clone();
        rev.points.reverse();
        rev
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Closed,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SelectionScope {
    Items,
    Range,
    Group,
    LegendCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum XRange {
    Band {
        first: usize,
        last: usize,
        from: String,
        to: String,
    },
    Linear {
        min: f64,
        max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Selection {
    pub kind: PathKind,
    pub scope: SelectionScope,
    pub rows: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<XRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub legend_categories: BTreeSet<String>,
    /// Set when two or more groups matched an open stroke equally well.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
}

impl Selection {
    pub fn items(kind: PathKind, rows: BTreeSet<usize>) -> Selection {
        Selection {
            kind,
            scope: SelectionScope::Items,
            rows,
            range: None,
            group: None,
            legend_categories: BTreeSet::new(),
            tie: false,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Which anchors an open stroke is compared against in group matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GroupMatch {
    /// Only the group's marks inside the stroke's x range.
    #[default]
    InRange,
    /// Every mark of the group.
    FullGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SketchOptions {
    /// Endpoint gap always accepted as closed.
    pub close_gap_px: f64,
    /// Endpoint gap accepted as closed, as a fraction of stroke length.
    pub close_gap_fraction: f64,
    /// Strokes shorter than this are taps.
    pub min_length_px: f64,
    /// Horizontal slack around an open stroke on linear x axes.
    pub range_slack_px: f64,
    pub group_match: GroupMatch,
}

impl Default for SketchOptions {
    fn default() -> Self {
        SketchOptions {
            close_gap_px: 12.0,
            close_gap_fraction: 0.1,
            min_length_px: 8.0,
            range_slack_px: 4.0,
            group_match: GroupMatch::InRange,
        }
    }
}

/// Closed when the endpoints are within `max(12px, 10% of arc length)`.
pub fn classify_path(points: &[Point], opts: &SketchOptions) -> Result<PathKind, SketchError> {
    let length = polyline_length(points);
    if points.len() < 2 || length < opts.min_length_px {
        return Err(SketchError::TooShort { length });
    }
    let gap = points[0].distance(points[points.len() - 1]);
    if gap <= opts.close_gap_px.max(opts.close_gap_fraction * length) {
        Ok(PathKind::Closed)
    } else {
        Ok(PathKind::Open)
    }
}

fn check_bounds(scene: &SceneGraph, path: &SketchPath) -> Result<(), SketchError> {
    let bounds = scene.viewport.bounds();
    match path.points.iter().find(|p| !bounds.contains(**p)) {
        Some(p) => Err(SketchError::OutOfViewport { x: p.x, y: p.y }),
        None => Ok(()),
    }
}

fn rect_hits_polygon(rect: &Rect, polygon: &[Point]) -> bool {
    if rect.corners().iter().any(|&c| point_in_polygon(c, polygon)) {
        return true;
    }
    if polygon.iter().any(|&p| rect.contains(p)) {
        return true;
    }
    let corners = rect.corners();
    let crossed =
        ring_edges(&corners).any(|(r1, r2)| ring_edges(polygon).any(|(p1, p2)| segments_intersect(r1, r2, p1, p2)));
    crossed
}

/// Sixteen points along a slice outline: apex, two radius midpoints and
/// thirteen points spread evenly over the arc.
pub fn arc_boundary_samples(cx: f64, cy: f64, r: f64, start: f64, end: f64) -> Vec<Point> {
    let mut samples = Vec::with_capacity(16);
    samples.push(Point::new(cx, cy));
    samples.push(arc_point(cx, cy, r / 2.0, start));
    samples.push(arc_point(cx, cy, r / 2.0, end));
    for i in 0..13 {
        let t = f64::from(i) / 12.0;
        samples.push(arc_point(cx, cy, r, start + t * (end - start)));
    }
    samples
}

fn mark_hits_polygon(mark: &Mark, polygon: &[Point]) -> bool {
    match mark.shape {
        Shape::Rect { x, y, width, height } => rect_hits_polygon(&Rect::new(x, y, width, height), polygon),
        Shape::Point { cx, cy, r } => {
            let c = Point::new(cx, cy);
            point_in_polygon(c, polygon) || ring_edges(polygon).any(|(a, b)| point_segment_distance(c, a, b) <= r)
        }
        Shape::ArcSlice {
            cx,
            cy,
            r,
            start_angle,
            end_angle,
        } => arc_boundary_samples(cx, cy, r, start_angle, end_angle)
            .into_iter()
            .any(|p| point_in_polygon(p, polygon)),
        Shape::LineVertex { x, y, .. } => point_in_polygon(Point::new(x, y), polygon),
    }
}

/// Resolves a lasso. Marks inside or touching the ring win; if none are hit
/// but legend labels are, every row of those categories is selected.
pub fn resolve_closed(scene: &SceneGraph, path: &SketchPath) -> Result<Selection, SketchError> {
    check_bounds(scene, path)?;
    let polygon = &path.points;
    let rows: BTreeSet<usize> = scene
        .marks
        .iter()
        .filter(|m| mark_hits_polygon(m, polygon))
        .map(|m| m.row)
        .collect();
    if !rows.is_empty() {
        return Ok(Selection::items(PathKind::Closed, rows));
    }
    let categories: BTreeSet<String> = scene
        .legend
        .iter()
        .filter(|l| rect_hits_polygon(&l.label_box, polygon))
        .map(|l| l.category.clone())
        .collect();
    if categories.is_empty() {
        return Err(SketchError::EmptySelection);
    }
    let rows: BTreeSet<usize> = scene
        .marks
        .iter()
        .filter(|m| m.category.as_ref().is_some_and(|c| categories.contains(c)))
        .map(|m| m.row)
        .collect();
    if rows.is_empty() {
        return Err(SketchError::EmptySelection);
    }
    Ok(Selection {
        scope: SelectionScope::LegendCategory,
        legend_categories: categories,
        ..Selection::items(PathKind::Closed, rows)
    })
}

/// The stroke's x extent in data terms, and a predicate for marks inside it.
struct StrokeRange {
    range: XRange,
    bands: Option<(usize, usize)>,
    values: Option<(f64, f64)>,
}

impl StrokeRange {
    fn contains(&self, scene: &SceneGraph, mark: &Mark) -> bool {
        match (&scene.x_scale, self.bands, self.values) {
            (Some(Scale::Band(b)), Some((lo, hi)), _) => b.index_of(&mark.x).is_some_and(|i| i >= lo && i <= hi),
            (_, _, Some((lo, hi))) => mark.x.as_f64().is_some_and(|v| v >= lo && v <= hi),
            _ => false,
        }
    }
}

fn stroke_range(scene: &SceneGraph, path: &SketchPath, opts: &SketchOptions) -> Result<StrokeRange, SketchError> {
    let plot = scene.plot_area();
    let clamp = |x: f64| x.clamp(plot.x, plot.x + plot.width);
    let (mut min_x, mut max_x) = path
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.x), hi.max(p.x))
        });
    match scene.x_scale.as_ref().ok_or(LayoutError::NoXAxis)? {
        Scale::Band(b) => {
            let lo = scene.invert_x(clamp(min_x))?;
            let hi = scene.invert_x(clamp(max_x))?;
            let (XPosition::Band(lo), XPosition::Band(hi)) = (lo, hi) else {
                unreachable!("band scales invert to bands")
            };
            Ok(StrokeRange {
                range: XRange::Band {
                    first: lo,
                    last: hi,
                    from: b.labels[lo].clone(),
                    to: b.labels[hi].clone(),
                },
                bands: Some((lo, hi)),
                values: None,
            })
        }
        Scale::Linear(s) => {
            min_x = clamp(min_x - opts.range_slack_px);
            max_x = clamp(max_x + opts.range_slack_px);
            let (a, b) = (s.invert(min_x), s.invert(max_x));
            let (lo, hi) = (a.min(b), a.max(b));
            Ok(StrokeRange {
                range: XRange::Linear { min: lo, max: hi },
                bands: None,
                values: Some((lo, hi)),
            })
        }
    }
}

/// Open stroke on a simple chart: every row whose x lies in the stroke's range.
pub fn resolve_open_simple(
    scene: &SceneGraph,
    path: &SketchPath,
    opts: &SketchOptions,
) -> Result<Selection, SketchError> {
    if scene.chart_class == ChartClass::Pie {
        return Err(SketchError::OpenPathOnPie);
    }
    check_bounds(scene, path)?;
    let range = stroke_range(scene, path, opts)?;
    let rows: BTreeSet<usize> = scene
        .marks
        .iter()
        .filter(|m| range.contains(scene, m))
        .map(|m| m.row)
        .collect();
    if rows.is_empty() {
        return Err(SketchError::EmptySelection);
    }
    Ok(Selection {
        scope: SelectionScope::Range,
        range: Some(range.range),
        ..Selection::items(PathKind::Open, rows)
    })
}

/// Open stroke on a grouped chart: restrict to the stroke's x range, then pick
/// the category group with the smallest mean anchor-to-stroke distance. Equal
/// distances resolve to the first category in sort order and set `tie`.
pub fn resolve_open_grouped(
    scene: &SceneGraph,
    path: &SketchPath,
    opts: &SketchOptions,
) -> Result<Selection, SketchError> {
    if !scene.chart_class.is_complex() {
        return Err(SketchError::NotGrouped(scene.chart_class));
    }
    check_bounds(scene, path)?;
    let range = stroke_range(scene, path, opts)?;

    let mut in_range: BTreeMap<&str, Vec<&Mark>> = BTreeMap::new();
    let mut whole: BTreeMap<&str, Vec<&Mark>> = BTreeMap::new();
    for mark in &scene.marks {
        let Some(cat) = mark.category.as_deref() else { continue };
        whole.entry(cat).or_default().push(mark);
        if range.contains(scene, mark) {
            in_range.entry(cat).or_default().push(mark);
        }
    }
    if in_range.is_empty() {
        return Err(SketchError::EmptySelection);
    }

    let mut best: Option<(&str, f64)> = None;
    let mut tie = false;
    for (&cat, marks) in &in_range {
        let anchor_marks = match opts.group_match {
            GroupMatch::InRange => marks,
            GroupMatch::FullGroup => &whole[cat],
        };
        let anchors: Vec<Point> = anchor_marks.iter().map(|m| m.shape.anchor()).collect();
        let d = avg_min_distance(&anchors, &path.points);
        match best {
            None => best = Some((cat, d)),
            Some((_, bd)) if (d - bd).abs() <= 1e-9 => tie = true,
            Some((_, bd)) if d < bd => {
                best = Some((cat, d));
                tie = false;
            }
            _ => {}
        }
    }
    let (group, _) = best.expect("at least one group in range");
    let rows = in_range[group].iter().map(|m| m.row).collect();
    Ok(Selection {
        scope: SelectionScope::Group,
        range: Some(range.range),
        group: Some(group.to_string()),
        tie,
        ..Selection::items(PathKind::Open, rows)
    })
}

/// Classifies the stroke and dispatches to the matching resolver.
pub fn resolve_sketch(scene: &SceneGraph, path: &SketchPath, opts: &SketchOptions) -> Result<Selection, SketchError> {
    match classify_path(&path.points, opts)? {
        PathKind::Closed => resolve_closed(scene, path),
        PathKind::Open if scene.chart_class.is_complex() => resolve_open_grouped(scene, path, opts),
        PathKind::Open => resolve_open_simple(scene, path, opts),
    }
}
