use proptest::prelude::*;
use serde_json::json;

use super::*;
use crate::sketch::{resolve_sketch, SketchOptions, SketchPath};
use crate::testutil::{lasso_around, movies, trace};

fn set(rows: &[usize]) -> BTreeSet<usize> {
    rows.iter().copied().collect()
}

#[test]
fn admissible_examples() {
    assert_eq!(
        admissible_fact_types(PathKind::Open, ChartClass::Line, ColumnType::Temporal, 5),
        BTreeSet::from([FactType::Trend])
    );
    assert_eq!(
        admissible_fact_types(PathKind::Closed, ChartClass::Bar, ColumnType::Categorical, 1),
        BTreeSet::from([FactType::Value, FactType::Proportion, FactType::Rank, FactType::Extreme])
    );
    assert_eq!(
        admissible_fact_types(PathKind::Open, ChartClass::Scatter, ColumnType::Numerical, 8),
        BTreeSet::from([FactType::Distribution])
    );
    assert!(admissible_fact_types(PathKind::Open, ChartClass::Scatter, ColumnType::Numerical, 3).is_empty());
    assert!(
        admissible_fact_types(PathKind::Closed, ChartClass::GroupedBar, ColumnType::Temporal, 1)
            .contains(&FactType::Difference)
    );
}

#[test]
fn rule_table_never_breaks_type_or_size_rules() {
    let kinds = [PathKind::Closed, PathKind::Open];
    let types = [ColumnType::Temporal, ColumnType::Categorical, ColumnType::Numerical];
    for kind in kinds {
        for class in ChartClass::ALL {
            for x_type in types {
                for n in [1, 2, 5, 20] {
                    let out = admissible_fact_types(kind, class, x_type, n);
                    if out.contains(&FactType::Trend) {
                        assert_eq!(x_type, ColumnType::Temporal);
                    }
                    if out.contains(&FactType::Difference) && n < 2 {
                        assert!(class.is_complex() && kind == PathKind::Closed);
                    }
                    if n < MIN_DISTRIBUTION_FOCUS {
                        assert!(!out.contains(&FactType::Outlier));
                    }
                }
            }
        }
    }
}

#[test]
fn single_bar_in_grouped_chart_gets_three_scopes() {
    let (spec, _, scene) = movies();
    let sel = Selection::items(PathKind::Closed, set(&[1]));
    let plans = expand_queries(&sel, &scene, &spec).unwrap();
    let scopes: Vec<ScopeKind> = plans.iter().map(|p| p.scope).collect();
    assert_eq!(scopes, [ScopeKind::All, ScopeKind::SameCategory, ScopeKind::SameX]);
    assert_eq!(plans[1].scope_label, "vs. same Genre");
    assert_eq!(plans[2].scope_label, "vs. same Year");
    let contexts: Vec<&BTreeSet<usize>> = plans.iter().map(|p| &p.queries[0].context).collect();
    assert_eq!(*contexts[0], (0..10).collect());
    assert_eq!(*contexts[1], set(&[0, 1, 2, 3, 4]));
    assert_eq!(*contexts[2], set(&[1, 6]));
    for plan in &plans {
        assert!(plan
            .queries
            .iter()
            .all(|q| q.focus == set(&[1]) && q.context.contains(&1)));
    }
}

#[test]
fn lasso_over_two_bars_is_a_separate_dataset() {
    let (spec, _, scene) = movies();
    let sel = Selection::items(PathKind::Closed, set(&[0, 5]));
    assert_eq!(
        expansion_mode(sel.kind, &sel.rows, &scene),
        ExpansionMode::SeparateDataset
    );
    let plans = expand_queries(&sel, &scene, &spec).unwrap();
    assert_eq!(plans.len(), 1);
    let types: Vec<FactType> = plans[0].queries.iter().map(|q| q.fact_type).collect();
    assert!(types.contains(&FactType::Difference));
    assert!(types.contains(&FactType::Value));
    assert!(plans[0].queries.iter().all(|q| q.context == q.focus));
}

#[test]
fn open_stroke_over_drama_asks_for_trend() {
    let (spec, _, scene) = movies();
    let stroke = SketchPath::new(trace(&scene, &[5, 6, 7, 8, 9], -3.0));
    let sel = resolve_sketch(&scene, &stroke, &SketchOptions::default()).unwrap();
    let plans = expand_queries(&sel, &scene, &spec).unwrap();
    assert_eq!(plans.len(), 1);
    assert_eq!(plans[0].queries.len(), 1);
    assert_eq!(plans[0].queries[0].fact_type, FactType::Trend);
    assert_eq!(plans[0].queries[0].focus, set(&[5, 6, 7, 8, 9]));
    assert_eq!(
        expansion_mode(PathKind::Open, &sel.rows, &scene),
        ExpansionMode::Series {
            group: Some("Drama".into())
        }
    );
}

#[test]
fn whole_category_compares_against_everything() {
    let (spec, _, scene) = movies();
    let sel = Selection::items(PathKind::Closed, set(&[5, 6, 7, 8, 9]));
    assert_eq!(
        expansion_mode(sel.kind, &sel.rows, &scene),
        ExpansionMode::Categories {
            categories: vec!["Drama".into()]
        }
    );
    let plans = expand_queries(&sel, &scene, &spec).unwrap();
    assert!(plans[0]
        .queries
        .iter()
        .all(|q| q.context.len() == 10 && q.focus.len() == 5));
}

#[test]
fn declarative_filters() {
    let (_, table, scene) = movies();
    let all = parse_declarative_intent(&json!({}), &table, &scene).unwrap();
    assert_eq!(all.rows, (0..10).collect());
    let range = json!({"filters": [
        {"field": "Year", "op": ">=", "value": 2007},
        {"field": "Year", "op": "≤", "value": 2009}
    ]});
    assert_eq!(
        parse_declarative_intent(&range, &table, &scene).unwrap().rows,
        set(&[1, 2, 3, 6, 7, 8])
    );
    let one = json!({"filters": [
        {"field": "Genre", "op": "=", "value": "Action"},
        {"field": "Year", "op": "=", "value": "2007"}
    ]});
    assert_eq!(parse_declarative_intent(&one, &table, &scene).unwrap().rows, set(&[1]));
}

#[test]
fn declarative_errors() {
    let (_, table, scene) = movies();
    let unknown = json!({"filters": [{"field": "Budget", "op": "=", "value": 1}]});
    assert_eq!(
        parse_declarative_intent(&unknown, &table, &scene),
        Err(IntentError::UnknownField("Budget".into()))
    );
    let bad_op = json!({"filters": [{"field": "Genre", "op": "<", "value": "B"}]});
    assert!(matches!(
        parse_declarative_intent(&bad_op, &table, &scene),
        Err(IntentError::TypeMismatch { .. })
    ));
    let bad_value = json!({"filters": [{"field": "Count", "op": ">", "value": true}]});
    assert!(matches!(
        parse_declarative_intent(&bad_value, &table, &scene),
        Err(IntentError::TypeMismatch { .. })
    ));
    let none = json!({"filters": [{"field": "Count", "op": ">", "value": 1000}]});
    assert_eq!(
        parse_declarative_intent(&none, &table, &scene),
        Err(IntentError::EmptyResult)
    );
    let typo = json!({"filter": []});
    assert!(matches!(
        parse_declarative_intent(&typo, &table, &scene),
        Err(IntentError::Malformed(_))
    ));
}

#[test]
fn open_intent_matches_open_stroke() {
    let (spec, table, scene) = movies();
    let doc = json!({"path": "open", "filters": [{"field": "Genre", "op": "=", "value": "Drama"}]});
    let from_intent = parse_declarative_intent(&doc, &table, &scene).unwrap();
    let stroke = SketchPath::new(trace(&scene, &[5, 6, 7, 8, 9], -3.0));
    let from_sketch = resolve_sketch(&scene, &stroke, &SketchOptions::default()).unwrap();
    assert_eq!(from_intent.rows, from_sketch.rows);
    assert_eq!(
        expand_queries(&from_intent, &scene, &spec).unwrap(),
        expand_queries(&from_sketch, &scene, &spec).unwrap()
    );
}

proptest! {
    #[test]
    fn lasso_and_intent_expand_identically(rows in prop::sample::subsequence((0usize..10).collect::<Vec<_>>(), 1..6)) {
        let (spec, _, scene) = movies();
        let ring = SketchPath::new(lasso_around(&scene, &rows, 2.0));
        let sketched = resolve_sketch(&scene, &ring, &SketchOptions::default()).unwrap();
        let from_rows = selection_for_rows(PathKind::Closed, sketched.rows.clone(), &scene);
        prop_assert_eq!(
            expand_queries(&sketched, &scene, &spec).unwrap(),
            expand_queries(&from_rows, &scene, &spec).unwrap()
        );
    }

    #[test]
    fn separate_dataset_queries_use_focus_as_context(rows in prop::sample::subsequence((0usize..10).collect::<Vec<_>>(), 2..10)) {
        let (spec, _, scene) = movies();
        let sel = Selection::items(PathKind::Closed, rows.iter().copied().collect());
        if expansion_mode(sel.kind, &sel.rows, &scene) == ExpansionMode::SeparateDataset {
            for plan in expand_queries(&sel, &scene, &spec).unwrap() {
                for q in plan.queries {
                    prop_assert_eq!(&q.context, &q.focus);
                    prop_assert!(q.fact_type != FactType::Difference || q.focus.len() >= 2);
                }
            }
        }
    }
}
