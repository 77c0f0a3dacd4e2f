//! Turning selections into fact queries.
//!
//! The expansion depends only on the path kind, the selected row ids and the
//! chart, so a sketch and a declarative intent that pick the same rows always
//! yield the same queries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::chart::{ChartClass, ChartSpec};
use crate::dataset::{parse_cell, Cell, ColumnType, DataTable};
use crate::layout::SceneGraph;
use crate::sketch::{PathKind, Selection, SelectionScope};

#[derive(Debug, Error, PartialEq)]
pub enum IntentError {
    #[error("no admissible fact types for this selection")]
    NoAdmissibleFacts,
    #[error("malformed intent: {0}")]
    Malformed(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("filter on `{field}`: {detail}")]
    TypeMismatch { field: String, detail: String },
    #[error("the filters match no drawn rows")]
    EmptyResult,
}

/// Kinds of data facts, declared in card presentation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FactType {
    Trend,
    Extreme,
    Outlier,
    Difference,
    Rank,
    Proportion,
    Distribution,
    Value,
}

impl FactType {
    pub const ALL: [FactType; 8] = [
        FactType::Trend,
        FactType::Extreme,
        FactType::Outlier,
        FactType::Difference,
        FactType::Rank,
        FactType::Proportion,
        FactType::Distribution,
        FactType::Value,
    ];
}

/// Minimum focus size for quartile-based facts.
pub const MIN_DISTRIBUTION_FOCUS: usize = 5;

/// Comparison universe a query is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ScopeKind {
    /// The selection itself.
    Selection,
    All,
    SameCategory,
    SameX,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FactQuery {
    pub fact_type: FactType,
    pub focus: BTreeSet<usize>,
    pub context: BTreeSet<usize>,
    pub measure: String,
    pub breakdown: String,
    pub scope: ScopeKind,
    pub scope_label: String,
}

/// Queries that end up on one documentation card.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CardPlan {
    pub scope: ScopeKind,
    pub scope_label: String,
    pub queries: Vec<FactQuery>,
}

/// How a selection is interpreted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "camelCase")]
pub enum ExpansionMode {
    /// One closed-path item.
    SingleItem,
    /// Several closed-path items treated as their own dataset.
    SeparateDataset,
    /// Complete categories of a multi-group chart, compared against all rows.
    Categories { categories: Vec<String> },
    /// An open path: the rows as an ordered series. `group` is set when all
    /// rows belong to one category.
    Series { group: Option<String> },
}

impl ExpansionMode {
    /// Whether card text gets the "among the selected n items" lead-in.
    pub fn counts_items(&self) -> bool {
        matches!(
            self,
            ExpansionMode::SeparateDataset | ExpansionMode::Series { group: None }
        )
    }
}

fn rows_by_category(scene: &SceneGraph) -> BTreeMap<&str, BTreeSet<usize>> {
    let mut out: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for mark in &scene.marks {
        if let Some(c) = &mark.category {
            out.entry(c.as_str()).or_default().insert(mark.row);
        }
    }
    out
}

pub fn expansion_mode(kind: PathKind, rows: &BTreeSet<usize>, scene: &SceneGraph) -> ExpansionMode {
    let by_category = rows_by_category(scene);
    match kind {
        PathKind::Open => {
            let groups: BTreeSet<&str> = scene
                .marks
                .iter()
                .filter(|m| rows.contains(&m.row))
                .filter_map(|m| m.category.as_deref())
                .collect();
            let group = match (scene.chart_class.is_complex(), groups.len()) {
                (true, 1) => groups.into_iter().next().map(str::to_string),
                _ => None,
            };
            ExpansionMode::Series { group }
        }
        PathKind::Closed if rows.len() == 1 => ExpansionMode::SingleItem,
        PathKind::Closed => {
            if scene.chart_class.is_complex() && rows.len() < scene.marks.len() {
                let covered: Vec<&str> = by_category
                    .iter()
                    .filter(|(_, members)| members.is_subset(rows))
                    .map(|(c, _)| *c)
                    .collect();
                let union: BTreeSet<usize> = covered.iter().flat_map(|c| by_category[c].iter().copied()).collect();
                if !covered.is_empty() && union == *rows {
                    return ExpansionMode::Categories {
                        categories: covered.into_iter().map(str::to_string).collect(),
                    };
                }
            }
            ExpansionMode::SeparateDataset
        }
    }
}

/// Fact types worth computing for a selection.
///
/// `focus_len` is the number of selected items. A single closed-path item on
/// a multi-group chart keeps Difference because its comparison scopes supply
/// the other side.
pub fn admissible_fact_types(
    kind: PathKind,
    chart: ChartClass,
    x_type: ColumnType,
    focus_len: usize,
) -> BTreeSet<FactType> {
    let mut out: BTreeSet<FactType> = FactType::ALL.into_iter().collect();
    if x_type != ColumnType::Temporal || focus_len < 2 {
        out.remove(&FactType::Trend);
    }
    let scoped_single = focus_len == 1 && kind == PathKind::Closed && chart.is_complex();
    if focus_len < 2 && !scoped_single {
        out.remove(&FactType::Difference);
    }
    if focus_len < MIN_DISTRIBUTION_FOCUS {
        out.remove(&FactType::Distribution);
        out.remove(&FactType::Outlier);
    }
    if x_type == ColumnType::Numerical {
        out.remove(&FactType::Proportion);
    }
    if kind == PathKind::Open {
        let keep = if x_type == ColumnType::Temporal {
            FactType::Trend
        } else {
            FactType::Distribution
        };
        out.retain(|t| *t == keep);
    }
    out
}

fn plan(
    scope: ScopeKind,
    scope_label: String,
    types: &BTreeSet<FactType>,
    focus: &BTreeSet<usize>,
    context: BTreeSet<usize>,
    spec: &ChartSpec,
) -> CardPlan {
    let queries = types
        .iter()
        .map(|&fact_type| FactQuery {
            fact_type,
            focus: focus.clone(),
            context: context.clone(),
            measure: spec.measure().to_string(),
            breakdown: spec.x.field.clone(),
            scope,
            scope_label: scope_label.clone(),
        })
        .collect();
    CardPlan {
        scope,
        scope_label,
        queries,
    }
}

/// Expands a selection into card plans, one per comparison scope.
pub fn expand_queries(sel: &Selection, scene: &SceneGraph, spec: &ChartSpec) -> Result<Vec<CardPlan>, IntentError> {
    let focus: BTreeSet<usize> = sel
        .rows
        .iter()
        .copied()
        .filter(|r| scene.mark_for_row(*r).is_some())
        .collect();
    if focus.is_empty() {
        return Err(IntentError::NoAdmissibleFacts);
    }
    let types = admissible_fact_types(sel.kind, scene.chart_class, spec.x.ty, focus.len());
    if types.is_empty() {
        return Err(IntentError::NoAdmissibleFacts);
    }
    let all: BTreeSet<usize> = scene.marks.iter().map(|m| m.row).collect();
    let plans = match expansion_mode(sel.kind, &focus, scene) {
        ExpansionMode::SingleItem if scene.chart_class.is_complex() => {
            let row = *focus.iter().next().unwrap();
            let mark = scene.mark_for_row(row).unwrap();
            let same_category: BTreeSet<usize> = scene
                .marks
                .iter()
                .filter(|m| m.category == mark.category)
                .map(|m| m.row)
                .collect();
            let same_x: BTreeSet<usize> = scene.marks.iter().filter(|m| m.x == mark.x).map(|m| m.row).collect();
            let category_field = spec.category_field().unwrap_or_default();
            vec![
                plan(ScopeKind::All, "vs. all items".into(), &types, &focus, all, spec),
                plan(
                    ScopeKind::SameCategory,
                    format!("vs. same {category_field}"),
                    &types,
                    &focus,
                    same_category,
                    spec,
                ),
                plan(
                    ScopeKind::SameX,
                    format!("vs. same {}", spec.x.field),
                    &types,
                    &focus,
                    same_x,
                    spec,
                ),
            ]
        }
        ExpansionMode::SingleItem | ExpansionMode::Categories { .. } => {
            vec![plan(ScopeKind::All, "vs. all items".into(), &types, &focus, all, spec)]
        }
        ExpansionMode::SeparateDataset | ExpansionMode::Series { .. } => vec![plan(
            ScopeKind::Selection,
            "selected items".into(),
            &types,
            &focus,
            focus.clone(),
            spec,
        )],
    };
    Ok(plans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterOp {
    #[serde(rename = "=", alias = "==")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=", alias = "≤")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=", alias = "≥")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub field: String,
    pub op: FilterOp,
    pub value: Value,
}

/// Conjunctive field filters, the keyboard alternative to sketching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclarativeIntent {
    #[serde(default)]
    pub filters: Vec<Filter>,
    /// Sketch kind the intent stands in for.
    #[serde(default = "default_path")]
    pub path: PathKind,
}

fn default_path() -> PathKind {
    PathKind::Closed
}

enum Predicate {
    Text(String),
    Number(FilterOp, f64),
}

fn compile_filter(filter: &Filter, table: &DataTable) -> Result<Predicate, IntentError> {
    let column = table
        .column(&filter.field)
        .ok_or_else(|| IntentError::UnknownField(filter.field.clone()))?;
    let mismatch = |detail: &str| IntentError::TypeMismatch {
        field: filter.field.clone(),
        detail: detail.to_string(),
    };
    match column.column_type() {
        ColumnType::Categorical => {
            if filter.op != FilterOp::Eq {
                return Err(mismatch("categorical fields only support `=`"));
            }
            match &filter.value {
                Value::String(s) => Ok(Predicate::Text(s.clone())),
                Value::Number(n) => Ok(Predicate::Text(n.to_string())),
                _ => Err(mismatch("expected a string value")),
            }
        }
        ColumnType::Numerical | ColumnType::Temporal => {
            let v = match &filter.value {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => parse_cell(column.column_type(), s).as_f64(),
                _ => None,
            }
            .ok_or_else(|| mismatch("expected a number or date value"))?;
            Ok(Predicate::Number(filter.op, v))
        }
    }
}

fn matches(pred: &Predicate, cell: &Cell) -> bool {
    match pred {
        Predicate::Text(t) => cell.as_text() == Some(t.as_str()),
        Predicate::Number(op, v) => match cell.as_f64() {
            None => false,
            Some(c) => match op {
                FilterOp::Eq => c == *v,
                FilterOp::Lt => c < *v,
                FilterOp::Le => c <= *v,
                FilterOp::Gt => c > *v,
                FilterOp::Ge => c >= *v,
            },
        },
    }
}

/// Rows of the drawn chart satisfying every filter, as a selection.
pub fn parse_declarative_intent(doc: &Value, table: &DataTable, scene: &SceneGraph) -> Result<Selection, IntentError> {
    let intent: DeclarativeIntent =
        serde_json::from_value(doc.clone()).map_err(|e| IntentError::Malformed(e.to_string()))?;
    let predicates = intent
        .filters
        .iter()
        .map(|f| compile_filter(f, table).map(|p| (f.field.as_str(), p)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: BTreeSet<usize> = scene
        .marks
        .iter()
        .map(|m| m.row)
        .filter(|&row| {
            predicates
                .iter()
                .all(|(field, p)| table.cell(field, row).is_some_and(|c| matches(p, c)))
        })
        .collect();
    if rows.is_empty() {
        return Err(IntentError::EmptyResult);
    }
    Ok(selection_for_rows(intent.path, rows, scene))
}

/// Selection metadata consistent with what a sketch over `rows` would carry.
pub fn selection_for_rows(kind: PathKind, rows: BTreeSet<usize>, scene: &SceneGraph) -> Selection {
    let mode = expansion_mode(kind, &rows, scene);
    let mut sel = Selection::items(kind, rows);
    match mode {
        ExpansionMode::Categories { categories } => {
            sel.scope = SelectionScope::LegendCategory;
            sel.legend_categories = categories.into_iter().collect();
        }
        ExpansionMode::Series { group: Some(g) } => {
            sel.scope = SelectionScope::Group;
            sel.group = Some(g);
        }
        ExpansionMode::Series { group: None } => sel.scope = SelectionScope::Range,
        ExpansionMode::SingleItem | ExpansionMode::SeparateDataset => {}
    }
    sel
}

#[cfg(test)]
mod tests;
