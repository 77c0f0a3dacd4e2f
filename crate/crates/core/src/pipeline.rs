//! End-to-end generation: chart document plus a stroke or intent in,
//! documentation cards out.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::chart::{data_source, parse_chart_spec, ChartError, ChartSpec, DataSource};
use crate::dataset::{load_table, DataError, DataTable};
use crate::docstore::{CardDraft, DocError, Session};
use crate::facts::{compute_fact, FactError};
use crate::geometry::Point;
use crate::intent::{expand_queries, expansion_mode, parse_declarative_intent, IntentError};
use crate::layout::{layout_chart, render_svg, LayoutError, SceneGraph, Viewport};
use crate::nlg::{compose_card, realize_fact, refine_card, Refiner};
use crate::sketch::{resolve_sketch, Selection, SketchError, SketchOptions, SketchPath};

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("chart document has no data; supply records or inline `data.values`")]
    NoData,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Fact(#[from] FactError),
    #[error(transparent)]
    Doc(#[from] DocError),
}

impl PipelineError {
    /// Stable machine-readable name of the failure.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::NoData => "NoData",
            PipelineError::Data(e) => match e {
                DataError::EmptyInput => "EmptyInput",
                DataError::AllMissing(_) => "AllMissing",
                DataError::RaggedRecords { .. } => "RaggedRecords",
                DataError::DuplicateColumn(_) => "DuplicateColumn",
                DataError::UnsupportedValue { .. } => "UnsupportedValue",
                DataError::LengthMismatch { .. } => "LengthMismatch",
                DataError::Csv(_) | DataError::Json(_) => "MalformedData",
            },
            PipelineError::Chart(e) => match e {
                ChartError::Malformed(_) => "MalformedChart",
                ChartError::UnknownField(_) => "UnknownField",
                ChartError::UnsupportedMark(_) => "UnsupportedMark",
                ChartError::EncodingTypeMismatch { .. } => "EncodingTypeMismatch",
            },
            PipelineError::Layout(e) => match e {
                LayoutError::InvalidViewport => "InvalidViewport",
                LayoutError::NegativeValue { .. } => "NegativeValue",
                LayoutError::ZeroTotal => "ZeroTotal",
                LayoutError::OutOfPlotArea(_) => "OutOfPlotArea",
                LayoutError::NoXAxis => "NoXAxis",
            },
            PipelineError::Sketch(e) => match e {
                SketchError::TooShort { .. } => "TooShort",
                SketchError::EmptySelection => "EmptySelection",
                SketchError::OpenPathOnPie => "OpenPathOnPie",
                SketchError::OutOfViewport { .. } => "OutOfViewport",
                SketchError::WrongKind { .. } => "WrongKind",
                SketchError::NotGrouped(_) => "NotGrouped",
                SketchError::Layout(_) => "OutOfPlotArea",
            },
            PipelineError::Intent(e) => match e {
                IntentError::NoAdmissibleFacts => "NoAdmissibleFacts",
                IntentError::Malformed(_) => "MalformedIntent",
                IntentError::UnknownField(_) => "UnknownField",
                IntentError::TypeMismatch { .. } => "TypeMismatch",
                IntentError::EmptyResult => "EmptySelection",
            },
            PipelineError::Fact(_) => "FactError",
            PipelineError::Doc(e) => match e {
                DocError::UnknownCard(_) => "UnknownCard",
                DocError::UnknownGroup(_) => "UnknownGroup",
                DocError::UnknownSketch(_) => "UnknownSketch",
                DocError::DuplicateId(_) => "DuplicateId",
                DocError::AlreadyGrouped(_) => "AlreadyGrouped",
                DocError::TooFew => "TooFew",
                DocError::InvalidTarget(_) => "InvalidTarget",
                DocError::Malformed(_) => "MalformedSession",
            },
        }
    }

    /// The input was valid but selected nothing worth documenting.
    pub fn is_empty_outcome(&self) -> bool {
        matches!(self.code(), "EmptySelection" | "NoAdmissibleFacts")
    }
}

/// A validated chart, its data and its layout.
#[derive(Debug, Clone)]
pub struct PreparedChart {
    pub doc: Value,
    pub records: Vec<Value>,
    pub spec: ChartSpec,
    pub table: DataTable,
    pub scene: SceneGraph,
}

impl PreparedChart {
    /// Explicit `records` win over inline `data.values`; a `data.url` must
    /// be resolved by the caller.
    pub fn new(doc: &Value, records: Option<Vec<Value>>, viewport: &Viewport) -> Result<PreparedChart, PipelineError> {
        let records = match records {
            Some(r) => r,
            None => match data_source(doc) {
                DataSource::Inline(values) => values,
                DataSource::Url(_) | DataSource::None => return Err(PipelineError::NoData),
            },
        };
        let table = load_table(&records)?;
        let spec = parse_chart_spec(doc, &table)?;
        let scene = layout_chart(&spec, &table, viewport)?;
        Ok(PreparedChart {
            doc: doc.clone(),
            records,
            spec,
            table,
            scene,
        })
    }

    pub fn from_session(session: &Session) -> Result<PreparedChart, PipelineError> {
        PreparedChart::new(&session.chart, Some(session.data.clone()), &session.viewport)
    }

    pub fn svg(&self) -> String {
        render_svg(&self.scene)
    }

    pub fn new_session(&self, id: impl Into<String>) -> Session {
        Session::new(id, self.doc.clone(), self.records.clone(), self.scene.viewport)
    }
}

/// A refiner together with its output budget.
#[derive(Clone, Copy)]
pub struct Refinement<'a> {
    pub refiner: &'a dyn Refiner,
    pub max_tokens: u32,
}

/// Cards generated for one selection, not yet stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Findings {
    pub selection: Selection,
    pub drafts: Vec<CardDraft>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Facts and template text for every comparison scope of the selection.
/// Scopes without any fact are left out.
pub fn generate_cards(chart: &PreparedChart, selection: Selection) -> Result<Findings, PipelineError> {
    if selection.is_empty() {
        return Err(SketchError::EmptySelection.into());
    }
    let plans = expand_queries(&selection, &chart.scene, &chart.spec)?;
    let focus: BTreeSet<usize> = selection
        .rows
        .iter()
        .copied()
        .filter(|r| chart.scene.mark_for_row(*r).is_some())
        .collect();
    let mode = expansion_mode(selection.kind, &focus, &chart.scene);
    let mut drafts = Vec::new();
    for plan in &plans {
        let mut facts = Vec::new();
        for query in &plan.queries {
            facts.extend(compute_fact(query, &chart.scene, &chart.table)?);
        }
        if facts.is_empty() {
            continue;
        }
        let sentences: Vec<_> = facts.iter().map(realize_fact).collect();
        let text = compose_card(&sentences, focus.len(), &mode);
        let scope_label = (plans.len() > 1).then(|| plan.scope_label.clone());
        drafts.push(CardDraft {
            scope_label,
            text,
            facts,
        });
    }
    if drafts.is_empty() {
        return Err(IntentError::NoAdmissibleFacts.into());
    }
    let group_label = if drafts.len() > 1 {
        item_label(chart, &focus)
    } else {
        None
    };
    Ok(Findings {
        selection,
        drafts,
        group_label,
        warnings: Vec::new(),
    })
}

fn item_label(chart: &PreparedChart, focus: &BTreeSet<usize>) -> Option<String> {
    let row = *focus.iter().next()?;
    let x = chart.table.cell(&chart.spec.x.field, row)?.label();
    let mark = chart.scene.mark_for_row(row)?;
    Some(match (&mark.category, chart.spec.category_field()) {
        (Some(category), Some(field)) => format!("{category} ({field}) in {x}"),
        _ => x,
    })
}

/// Rewrites every draft through the refiner; failures keep the template
/// text and add a warning.
pub fn refine_findings(findings: &mut Findings, refinement: Refinement<'_>) {
    for draft in &mut findings.drafts {
        let (text, warning) = refine_card(
            &draft.text,
            draft.facts.len(),
            refinement.refiner,
            refinement.max_tokens,
        );
        draft.text = text;
        findings.warnings.extend(warning);
    }
}

/// Resolves a stroke and generates its cards.
pub fn findings_for_stroke(
    chart: &PreparedChart,
    points: &[Point],
    opts: &SketchOptions,
) -> Result<Findings, PipelineError> {
    let selection = resolve_sketch(&chart.scene, &SketchPath::new(points.to_vec()), opts)?;
    generate_cards(chart, selection)
}

/// Resolves a declarative intent document and generates its cards.
pub fn findings_for_intent(chart: &PreparedChart, intent: &Value) -> Result<Findings, PipelineError> {
    let selection = parse_declarative_intent(intent, &chart.table, &chart.scene)?;
    generate_cards(chart, selection)
}

/// Card ids created by one submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Submission {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sketch_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<String>,
    pub card_ids: Vec<String>,
}

/// Stores findings first in the session. A stroke is recorded as a sketch
/// whose color the new cards share.
pub fn commit_findings(session: &mut Session, stroke: Option<Vec<Point>>, findings: &Findings) -> Submission {
    let rows: Vec<usize> = findings.selection.rows.iter().copied().collect();
    let sketch = stroke.map(|points| (findings.selection.kind, points, rows));
    let had_sketch = sketch.is_some();
    let card_ids = session.add_findings(sketch, findings.drafts.clone(), findings.group_label.clone());
    let sketch_id = had_sketch
        .then(|| session.sketches.last().map(|s| s.id.clone()))
        .flatten();
    let group_id = (card_ids.len() > 1).then(|| session.tree[0].id().to_string());
    Submission {
        sketch_id,
        group_id,
        card_ids,
    }
}

/// Stroke in, cards stored.
pub fn submit_stroke(
    session: &mut Session,
    chart: &PreparedChart,
    points: Vec<Point>,
    opts: &SketchOptions,
    refinement: Option<Refinement<'_>>,
) -> Result<(Findings, Submission), PipelineError> {
    let mut findings = findings_for_stroke(chart, &points, opts)?;
    if let Some(r) = refinement {
        refine_findings(&mut findings, r);
    }
    let submission = commit_findings(session, Some(points), &findings);
    Ok((findings, submission))
}

/// Intent in, cards stored.
pub fn submit_intent(
    session: &mut Session,
    chart: &PreparedChart,
    intent: &Value,
    refinement: Option<Refinement<'_>>,
) -> Result<(Findings, Submission), PipelineError> {
    let mut findings = findings_for_intent(chart, intent)?;
    if let Some(r) = refinement {
        refine_findings(&mut findings, r);
    }
    let submission = commit_findings(session, None, &findings);
    Ok((findings, submission))
}

#[cfg(test)]
mod tests;
