use serde_json::{json, Value};

use super::*;
use crate::docstore::Node;
use crate::facts::{Direction, ExtremeKind, FactParams};
use crate::intent::ScopeKind;
use crate::nlg::{RefineError, StubRefiner};
use crate::testutil::{lasso_around, trace, MOVIES};

fn chart_doc() -> Value {
    json!({
        "title": "Movies released per year",
        "mark": "bar",
        "encoding": {"x": {"field": "Year"}, "y": {"field": "Count"}, "color": {"field": "Genre"}}
    })
}

fn movies_chart() -> PreparedChart {
    let records: Vec<Value> = serde_json::from_str(MOVIES).unwrap();
    PreparedChart::new(&chart_doc(), Some(records), &Viewport::default()).unwrap()
}

fn params(findings: &Findings) -> Vec<&FactParams> {
    findings
        .drafts
        .iter()
        .flat_map(|d| d.facts.iter().map(|f| &f.params))
        .collect()
}

#[test]
fn inline_values_are_used_when_no_records_are_given() {
    let mut doc = chart_doc();
    doc["data"] = json!({"values": serde_json::from_str::<Value>(MOVIES).unwrap()});
    let chart = PreparedChart::new(&doc, None, &Viewport::default()).unwrap();
    assert_eq!(chart.scene.marks.len(), 10);
    doc["data"] = json!({"url": "data.json"});
    assert_eq!(
        PreparedChart::new(&doc, None, &Viewport::default()).unwrap_err(),
        PipelineError::NoData
    );
}

#[test]
fn validation_errors_have_codes() {
    let records: Vec<Value> = serde_json::from_str(MOVIES).unwrap();
    let mut doc = chart_doc();
    doc["encoding"]["y"]["field"] = json!("Gross");
    let err = PreparedChart::new(&doc, Some(records.clone()), &Viewport::default()).unwrap_err();
    assert_eq!(err.code(), "UnknownField");
    doc = chart_doc();
    doc["mark"] = json!("area");
    let err = PreparedChart::new(&doc, Some(records), &Viewport::default()).unwrap_err();
    assert_eq!(err.code(), "UnsupportedMark");
}

#[test]
fn drama_trace_gives_a_decreasing_trend_card() {
    let chart = movies_chart();
    let stroke = trace(&chart.scene, &[5, 6, 7, 8, 9], -3.0);
    let findings = findings_for_stroke(&chart, &stroke, &SketchOptions::default()).unwrap();
    assert_eq!(findings.selection.rows, (5..10).collect());
    assert_eq!(findings.drafts.len(), 1);
    let card = &findings.drafts[0];
    assert!(card
        .text
        .text
        .starts_with("The Count of Drama (Genre) decreased from 80 to 25"));
    assert!(matches!(
        params(&findings)[0],
        FactParams::Trend {
            direction: Direction::Decreasing,
            ..
        }
    ));
    assert!(findings.group_label.is_none());
}

#[test]
fn action_trace_gives_a_wavering_trend_with_four_segments() {
    let chart = movies_chart();
    let stroke = trace(&chart.scene, &[0, 1, 2, 3, 4], -3.0);
    let findings = findings_for_stroke(&chart, &stroke, &SketchOptions::default()).unwrap();
    match params(&findings)[0] {
        FactParams::Trend {
            direction, segments, ..
        } => {
            assert_eq!(*direction, Direction::Wavering);
            assert_eq!(segments.len(), 4);
        }
        other => panic!("expected a trend, got {other:?}"),
    }
}

#[test]
fn lassos_around_year_pairs_give_differences() {
    let chart = movies_chart();
    let f2006 = findings_for_stroke(
        &chart,
        &lasso_around(&chart.scene, &[0, 5], 4.0),
        &SketchOptions::default(),
    )
    .unwrap();
    assert!(params(&f2006).iter().any(|p| matches!(
        p,
        FactParams::Difference {
            whole_ratio: Some(4),
            ..
        }
    )));
    let f2010 = findings_for_stroke(
        &chart,
        &lasso_around(&chart.scene, &[4, 9], 4.0),
        &SketchOptions::default(),
    )
    .unwrap();
    let delta = params(&f2010)
        .iter()
        .find_map(|p| match p {
            FactParams::Difference { a, b, delta, .. } => Some((a.row, b.row, *delta)),
            _ => None,
        })
        .unwrap();
    assert_eq!(delta, (Some(4), Some(9), 1.0));
}

#[test]
fn single_bar_lasso_gives_a_labelled_group_of_three() {
    let chart = movies_chart();
    let findings = findings_for_stroke(
        &chart,
        &lasso_around(&chart.scene, &[1], 4.0),
        &SketchOptions::default(),
    )
    .unwrap();
    assert_eq!(findings.drafts.len(), 3);
    assert_eq!(findings.group_label.as_deref(), Some("Action (Genre) in 2007"));
    let labels: Vec<_> = findings.drafts.iter().map(|d| d.scope_label.clone().unwrap()).collect();
    assert_eq!(labels, ["vs. all items", "vs. same Genre", "vs. same Year"]);
    let same_genre = &findings.drafts[1];
    assert!(same_genre.facts.iter().all(|f| f.scope == ScopeKind::SameCategory));
    assert!(same_genre.facts.iter().any(|f| matches!(
        &f.params,
        FactParams::Extreme { kind: ExtremeKind::Max, item, .. } if item.row == 1
    )));
    assert!(!same_genre.text.text.starts_with("Among the selected"));
}

#[test]
fn empty_lasso_is_an_empty_outcome() {
    let chart = movies_chart();
    let corner = vec![
        Point::new(2.0, 2.0),
        Point::new(30.0, 2.0),
        Point::new(30.0, 30.0),
        Point::new(2.0, 30.0),
        Point::new(2.0, 2.0),
    ];
    let err = findings_for_stroke(&chart, &corner, &SketchOptions::default()).unwrap_err();
    assert_eq!(err.code(), "EmptySelection");
    assert!(err.is_empty_outcome());
    let tap = [Point::new(100.0, 100.0), Point::new(101.0, 100.0)];
    let err = findings_for_stroke(&chart, &tap, &SketchOptions::default()).unwrap_err();
    assert_eq!(err.code(), "TooShort");
    assert!(!err.is_empty_outcome());
}

#[test]
fn submissions_land_first_with_sketch_colors() {
    let chart = movies_chart();
    let mut session = chart.new_session("movies");
    let opts = SketchOptions::default();
    let (_, first) = submit_stroke(
        &mut session,
        &chart,
        trace(&chart.scene, &[5, 6, 7, 8, 9], -3.0),
        &opts,
        None,
    )
    .unwrap();
    let (_, second) = submit_stroke(&mut session, &chart, lasso_around(&chart.scene, &[1], 4.0), &opts, None).unwrap();
    assert_eq!(first.card_ids.len(), 1);
    assert_eq!(second.card_ids.len(), 3);
    assert_eq!(session.tree[0].id(), second.group_id.as_deref().unwrap());
    assert!(matches!(&session.tree[0], Node::Group { label: Some(l), .. } if l == "Action (Genre) in 2007"));
    assert_eq!(session.tree[1].id(), first.card_ids[0]);
    let sketch = session
        .sketches
        .iter()
        .find(|s| Some(&s.id) == second.sketch_id.as_ref())
        .unwrap();
    for id in &second.card_ids {
        assert_eq!(session.cards[id].color, sketch.color);
    }
    session.check_invariants().unwrap();
}

#[test]
fn intent_and_stroke_with_the_same_rows_give_the_same_facts() {
    let chart = movies_chart();
    let intent = json!({"filters": [{"field": "Genre", "op": "=", "value": "Drama"}], "path": "open"});
    let by_intent = findings_for_intent(&chart, &intent).unwrap();
    let stroke = trace(&chart.scene, &[5, 6, 7, 8, 9], -3.0);
    let by_stroke = findings_for_stroke(&chart, &stroke, &SketchOptions::default()).unwrap();
    let facts = |f: &Findings| serde_json::to_string(&f.drafts.iter().map(|d| &d.facts).collect::<Vec<_>>()).unwrap();
    assert_eq!(facts(&by_intent), facts(&by_stroke));

    let mut session = chart.new_session("movies");
    let (_, sub) = submit_intent(&mut session, &chart, &intent, None).unwrap();
    assert!(sub.sketch_id.is_none());
    assert!(session.sketches.is_empty());
}

#[test]
fn failing_refiner_keeps_template_text() {
    let chart = movies_chart();
    let plain = findings_for_stroke(
        &chart,
        &lasso_around(&chart.scene, &[1], 4.0),
        &SketchOptions::default(),
    )
    .unwrap();
    let failing = StubRefiner(|_: &str| Err(RefineError::Status(500)));
    let mut refined = plain.clone();
    refine_findings(
        &mut refined,
        Refinement {
            refiner: &failing,
            max_tokens: 64,
        },
    );
    assert_eq!(refined.drafts, plain.drafts);
    assert_eq!(refined.warnings.len(), 3);
}

#[test]
fn working_refiner_replaces_text_only() {
    let chart = movies_chart();
    let plain = findings_for_stroke(
        &chart,
        &trace(&chart.scene, &[5, 6, 7, 8, 9], -3.0),
        &SketchOptions::default(),
    )
    .unwrap();
    let polish = StubRefiner(|_: &str| Ok("Drama releases fell every year.".to_string()));
    let mut refined = plain.clone();
    refine_findings(
        &mut refined,
        Refinement {
            refiner: &polish,
            max_tokens: 64,
        },
    );
    assert_eq!(refined.drafts.len(), plain.drafts.len());
    assert_eq!(refined.drafts[0].text.text, "Drama releases fell every year.");
    assert_eq!(refined.drafts[0].facts, plain.drafts[0].facts);
    assert!(refined.warnings.is_empty());
}

#[test]
fn session_round_trip_rebuilds_the_same_chart() {
    let chart = movies_chart();
    let session = chart.new_session("movies");
    let restored = Session::from_json(&session.to_json()).unwrap();
    let rebuilt = PreparedChart::from_session(&restored).unwrap();
    assert_eq!(rebuilt.scene, chart.scene);
    assert_eq!(rebuilt.svg(), chart.svg());
}
