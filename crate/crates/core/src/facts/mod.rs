//! Data fact kernels.
//!
//! [`compute_fact`] evaluates one [`FactQuery`] against the drawn rows of a
//! chart and returns zero or more [`DataFact`]s. An empty result means the
//! fact does not hold for the selection (no outlier, no extreme, ...).

mod stats;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::ChartClass;
use crate::dataset::DataTable;
use crate::intent::{FactQuery, FactType, ScopeKind};
use crate::layout::SceneGraph;

pub use stats::{
    detect_outliers, detect_trend, fences, mean, pearson, quantile_sorted, quartiles, slope, std_dev, Direction,
    Fences, Run, Step, TrendShape, CONSISTENT_STEPS,
};

#[derive(Debug, Error, PartialEq)]
pub enum FactError {
    #[error("row {0} is not drawn or has no measure value")]
    UnknownRow(usize),
    #[error("need at least {needed} values, found {found}")]
    TooFewValues { needed: usize, found: usize },
    #[error("a trend needs at least two points")]
    TooFewPoints,
    #[error("trend x values must be strictly increasing")]
    NotIncreasing,
}

/// Largest focus for which individual values are echoed.
pub const MAX_ECHO_ITEMS: usize = 4;

/// Relative tolerance for calling a ratio a whole multiple.
pub const WHOLE_RATIO_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub row: usize,
    pub label: String,
    pub value: f64,
}

/// One side of a comparison; `row` is absent for aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Side {
    pub label: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
}

impl From<&Item> for Side {
    fn from(item: &Item) -> Side {
        Side {
            label: item.label.clone(),
            value: item.value,
            row: Some(item.row),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub row: usize,
    pub label: String,
    pub value: f64,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Share {
    pub label: String,
    pub value: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSegment {
    pub from: String,
    pub to: String,
    pub step: Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExtremeKind {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "factType", content = "parameters", rename_all = "camelCase")]
pub enum FactParams {
    #[serde(rename_all = "camelCase")]
    Trend {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        series: Option<String>,
        direction: Direction,
        slope: f64,
        start: Item,
        end: Item,
        segments: Vec<TrendSegment>,
    },
    #[serde(rename_all = "camelCase")]
    Extreme {
        item: Item,
        kind: ExtremeKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context_label: Option<String>,
    },
    #[serde(rename_all = "camelCase")]
    Outlier { items: Vec<Item>, fences: Fences },
    /// `delta = a - b`; `ratio = a / b` when `b` is non-zero.
    #[serde(rename_all = "camelCase")]
    Difference {
        a: Side,
        b: Side,
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        whole_ratio: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        percent: Option<f64>,
    },
    #[serde(rename_all = "camelCase")]
    Rank {
        top: RankedItem,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        last: Option<RankedItem>,
        of: usize,
    },
    #[serde(rename_all = "camelCase")]
    Proportion { shares: Vec<Share>, total: f64 },
    #[serde(rename_all = "camelCase")]
    Distribution {
        count: usize,
        min: f64,
        q1: f64,
        median: f64,
        q3: f64,
        max: f64,
        mean: f64,
        std_dev: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        correlation: Option<f64>,
    },
    #[serde(rename_all = "camelCase")]
    Value { items: Vec<Item> },
}

impl FactParams {
    pub fn fact_type(&self) -> FactType {
        match self {
            FactParams::Trend { .. } => FactType::Trend,
            FactParams::Extreme { .. } => FactType::Extreme,
            FactParams::Outlier { .. } => FactType::Outlier,
            FactParams::Difference { .. } => FactType::Difference,
            FactParams::Rank { .. } => FactType::Rank,
            FactParams::Proportion { .. } => FactType::Proportion,
            FactParams::Distribution { .. } => FactType::Distribution,
            FactParams::Value { .. } => FactType::Value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataFact {
    #[serde(flatten)]
    pub params: FactParams,
    pub measure: String,
    pub breakdown: String,
    pub scope: ScopeKind,
    pub scope_label: String,
    pub focus: Vec<usize>,
    pub context: Vec<usize>,
}

impl DataFact {
    pub fn fact_type(&self) -> FactType {
        self.params.fact_type()
    }
}

/// Number words used for whole ratios.
pub fn ratio_word(k: u32) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS.get(k as usize).map_or_else(|| k.to_string(), |w| w.to_string())
}

/// `Some(k)` when `a / b` is within the tolerance of a whole number `k >= 2`.
pub fn whole_ratio(a: f64, b: f64) -> Option<u32> {
    if !(a > 0.0 && b > 0.0) {
        return None;
    }
    let ratio = a / b;
    let k = ratio.round();
    (k >= 2.0 && (ratio - k).abs() <= WHOLE_RATIO_TOLERANCE * k).then_some(k as u32)
}

/// Looks up measure values and builds labels for rows of a drawn chart.
struct Rows<'a> {
    scene: &'a SceneGraph,
    table: &'a DataTable,
    measure: &'a str,
    scope: ScopeKind,
}

impl<'a> Rows<'a> {
    fn value(&self, row: usize) -> Result<f64, FactError> {
        self.scene.mark_for_row(row).ok_or(FactError::UnknownRow(row))?;
        self.table
            .cell(self.measure, row)
            .and_then(|c| c.as_f64())
            .ok_or(FactError::UnknownRow(row))
    }

    fn x_label(&self, row: usize) -> String {
        self.table
            .cell(&self.scene.x_field, row)
            .map(|c| c.label())
            .unwrap_or_default()
    }

    fn category(&self, row: usize) -> Option<&'a str> {
        self.scene.mark_for_row(row).and_then(|m| m.category.as_deref())
    }

    fn grouped(&self) -> bool {
        self.scene.chart_class.is_complex()
    }

    fn series_label(&self, category: &str) -> String {
        match &self.scene.category_field {
            Some(field) => format!("{category} ({field})"),
            None => category.to_string(),
        }
    }

    fn label(&self, row: usize) -> String {
        let x = self.x_label(row);
        match self.category(row) {
            Some(cat) if self.grouped() => match self.scope {
                ScopeKind::SameCategory => x,
                ScopeKind::SameX => self.series_label(cat),
                _ => format!("{} in {x}", self.series_label(cat)),
            },
            _ => x,
        }
    }

    fn item(&self, row: usize) -> Result<Item, FactError> {
        Ok(Item {
            row,
            label: self.label(row),
            value: self.value(row)?,
        })
    }

    /// Items ordered by value descending, ties by row id.
    fn ordered(&self, rows: &BTreeSet<usize>) -> Result<Vec<Item>, FactError> {
        let mut items = rows.iter().map(|&r| self.item(r)).collect::<Result<Vec<_>, _>>()?;
        items.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.row.cmp(&b.row)));
        Ok(items)
    }

    fn context_label(&self, query: &FactQuery) -> Option<String> {
        let row = *query.focus.iter().next()?;
        match query.scope {
            ScopeKind::Selection => None,
            ScopeKind::All => Some("all items".to_string()),
            ScopeKind::SameCategory => self.category(row).map(|c| self.series_label(c)),
            ScopeKind::SameX => Some(format!("{} {}", self.scene.x_field, self.x_label(row))),
        }
    }

    fn group_label(&self, rows: &BTreeSet<usize>) -> String {
        if rows.len() == 1 {
            return self.label(*rows.iter().next().unwrap());
        }
        let cats: BTreeSet<&str> = rows.iter().filter_map(|&r| self.category(r)).collect();
        if self.grouped() && !cats.is_empty() {
            let labels: Vec<String> = cats.iter().map(|c| self.series_label(c)).collect();
            labels.join(" and ")
        } else {
            "the selected items".to_string()
        }
    }
}

fn dense_positions(context: &[Item]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    let mut position = 0;
    let mut prev: Option<f64> = None;
    for item in context {
        if prev != Some(item.value) {
            position += 1;
            prev = Some(item.value);
        }
        out.insert(item.row, position);
    }
    out
}

fn trend_facts(rows: &Rows, focus: &BTreeSet<usize>) -> Result<Vec<FactParams>, FactError> {
    let mut series: BTreeMap<Option<&str>, Vec<(f64, f64, usize)>> = BTreeMap::new();
    for &row in focus {
        let mark = rows.scene.mark_for_row(row).ok_or(FactError::UnknownRow(row))?;
        let Some(x) = mark.x.as_f64() else { continue };
        series
            .entry(rows.category(row))
            .or_default()
            .push((x, rows.value(row)?, row));
    }
    let mut out = Vec::new();
    for (category, mut points) in series {
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        // Repeated x positions collapse into one point carrying their sum.
        let mut merged: Vec<(f64, f64, usize)> = Vec::new();
        for p in points {
            match merged.last_mut() {
                Some(last) if last.0 == p.0 => last.1 += p.1,
                _ => merged.push(p),
            }
        }
        if merged.len() < 2 {
            continue;
        }
        let xy: Vec<(f64, f64)> = merged.iter().map(|p| (p.0, p.1)).collect();
        let shape = detect_trend(&xy)?;
        let x_label = |i: usize| rows.x_label(merged[i].2);
        let point = |i: usize| Item {
            row: merged[i].2,
            label: x_label(i),
            value: merged[i].1,
        };
        out.push(FactParams::Trend {
            series: category.filter(|_| rows.grouped()).map(|c| rows.series_label(c)),
            direction: shape.direction,
            slope: shape.slope,
            start: point(0),
            end: point(merged.len() - 1),
            segments: shape
                .runs
                .iter()
                .map(|r| TrendSegment {
                    from: x_label(r.start),
                    to: x_label(r.end),
                    step: r.step,
                })
                .collect(),
        });
    }
    Ok(out)
}

fn difference(a: Side, b: Side) -> FactParams {
    let ratio = (b.value != 0.0).then(|| a.value / b.value);
    let percent = (b.value != 0.0).then(|| (a.value - b.value) / b.value.abs() * 100.0);
    FactParams::Difference {
        whole_ratio: whole_ratio(a.value, b.value),
        delta: a.value - b.value,
        ratio,
        percent,
        a,
        b,
    }
}

fn compute_params(query: &FactQuery, rows: &Rows) -> Result<Vec<FactParams>, FactError> {
    let focus = rows.ordered(&query.focus)?;
    let context = rows.ordered(&query.context)?;
    let top = &focus[0];
    let last = &focus[focus.len() - 1];
    let single = focus.len() == 1;
    Ok(match query.fact_type {
        FactType::Value => {
            if focus.len() > MAX_ECHO_ITEMS {
                vec![]
            } else {
                let mut items = focus.clone();
                items.sort_by_key(|i| i.row);
                vec![FactParams::Value { items }]
            }
        }
        FactType::Difference => {
            if !single {
                vec![difference(top.into(), last.into())]
            } else {
                let others: Vec<&Item> = context.iter().filter(|i| i.row != top.row).collect();
                match others.as_slice() {
                    [] => vec![],
                    [other] => vec![difference(top.into(), (*other).into())],
                    _ => {
                        let values: Vec<f64> = others.iter().map(|i| i.value).collect();
                        let b = Side {
                            label: "the average of the others".to_string(),
                            value: mean(&values),
                            row: None,
                        };
                        vec![difference(top.into(), b)]
                    }
                }
            }
        }
        FactType::Proportion => {
            let total: f64 = context.iter().map(|i| i.value).sum();
            if context.iter().any(|i| i.value < 0.0) || total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                vec![]
            } else if query.focus == query.context && !single {
                let picked: Vec<&Item> = if focus.len() > MAX_ECHO_ITEMS {
                    vec![top, last]
                } else {
                    focus.iter().collect()
                };
                let shares = picked
                    .into_iter()
                    .map(|i| Share {
                        label: i.label.clone(),
                        value: i.value,
                        share: i.value / total,
                    })
                    .collect();
                vec![FactParams::Proportion { shares, total }]
            } else {
                let value: f64 = focus.iter().map(|i| i.value).sum();
                let share = Share {
                    label: rows.group_label(&query.focus),
                    value,
                    share: value / total,
                };
                vec![FactParams::Proportion {
                    shares: vec![share],
                    total,
                }]
            }
        }
        FactType::Rank => {
            let positions = dense_positions(&context);
            let ranked = |i: &Item| RankedItem {
                row: i.row,
                label: i.label.clone(),
                value: i.value,
                position: positions[&i.row],
            };
            vec![FactParams::Rank {
                top: ranked(top),
                last: (!single).then(|| ranked(last)),
                of: context.len(),
            }]
        }
        FactType::Extreme => {
            let max = context[0].value;
            let min = context[context.len() - 1].value;
            let context_label = rows.context_label(query);
            let mut out = Vec::new();
            if let Some(item) = focus.iter().find(|i| i.value == max) {
                out.push(FactParams::Extreme {
                    item: item.clone(),
                    kind: ExtremeKind::Max,
                    context_label: context_label.clone(),
                });
            }
            if min < max && context.len() > 2 {
                if let Some(item) = focus.iter().rev().find(|i| i.value == min) {
                    out.push(FactParams::Extreme {
                        item: item.clone(),
                        kind: ExtremeKind::Min,
                        context_label,
                    });
                }
            }
            out
        }
        FactType::Outlier => {
            let values: Vec<f64> = context.iter().map(|i| i.value).collect();
            let f = fences(&values)?;
            let mut items: Vec<Item> = focus.iter().filter(|i| f.excludes(i.value)).cloned().collect();
            items.sort_by_key(|i| i.row);
            if items.is_empty() {
                vec![]
            } else {
                vec![FactParams::Outlier { items, fences: f }]
            }
        }
        FactType::Distribution => {
            let mut values: Vec<f64> = focus.iter().map(|i| i.value).collect();
            let (q1, q3) = quartiles(&values)?;
            values.sort_by(f64::total_cmp);
            let correlation = if rows.scene.chart_class == ChartClass::Scatter {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &row in &query.focus {
                    if let Some(x) = rows.scene.mark_for_row(row).and_then(|m| m.x.as_f64()) {
                        xs.push(x);
                        ys.push(rows.value(row)?);
                    }
                }
                pearson(&xs, &ys)
            } else {
                None
            };
            vec![FactParams::Distribution {
                count: values.len(),
                min: values[0],
                q1,
                median: quantile_sorted(&values, 0.5),
                q3,
                max: values[values.len() - 1],
                mean: mean(&values),
                std_dev: std_dev(&values),
                correlation,
            }]
        }
        FactType::Trend => trend_facts(rows, &query.focus)?,
    })
}

/// Evaluates one query. Rows must be drawn marks with a measure value.
pub fn compute_fact(query: &FactQuery, scene: &SceneGraph, table: &DataTable) -> Result<Vec<DataFact>, FactError> {
    if query.focus.is_empty() {
        return Ok(vec![]);
    }
    let rows = Rows {
        scene,
        table,
        measure: &query.measure,
        scope: query.scope,
    };
    let params = compute_params(query, &rows)?;
    Ok(params
        .into_iter()
        .map(|params| DataFact {
            params,
            measure: query.measure.clone(),
            breakdown: query.breakdown.clone(),
            scope: query.scope,
            scope_label: query.scope_label.clone(),
            focus: query.focus.iter().copied().collect(),
            context: query.context.iter().copied().collect(),
        })
        .collect())
}
