//! Sketch-driven documentation of chart findings.
//!
//! The pipeline: a chart specification is laid out into a [`layout::SceneGraph`];
//! a freehand stroke (or a declarative filter) resolves to a [`sketch::Selection`];
//! [`intent`] decides which data facts are worth computing; [`facts`] computes
//! them; [`nlg`] turns them into sentences; [`docstore`] keeps the resulting
//! documentation cards in an editable two-level tree.

pub mod chart;
pub mod dataset;
pub mod docstore;
pub mod facts;
pub mod geometry;
pub mod intent;
pub mod layout;
pub mod nlg;
pub mod pipeline;
pub mod sketch;

#[cfg(test)]
mod testutil;

pub use chart::{classify_chart, parse_chart_spec, ChartClass, ChartSpec};
pub use dataset::{ColumnType, DataTable};
pub use geometry::Point;
pub use layout::{layout_chart, render_svg, SceneGraph, Viewport};
pub use pipeline::{PipelineError, PreparedChart};
