mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use common::{call, call_raw, create_body, error_code, read_json, stroke};
use serde_json::json;
use sketchdoc::docstore::{export_markdown, Session};
use sketchdoc::nlg::{RefineError, StubRefiner};
use sketchdoc_service::{router, AppState, RouterOptions, SessionStore};

fn app() -> axum::Router {
    router(AppState::new(SessionStore::in_memory()), RouterOptions::default())
}

async fn app_with_session() -> axum::Router {
    let app = app();
    let (status, _) = call(&app, "POST", "/sessions", Some(create_body())).await;
    assert_eq!(status, StatusCode::OK);
    app
}

const S: &str = "/sessions/session-1";

#[tokio::test]
async fn creating_a_session_returns_scene_and_svg() {
    let app = app();
    let (status, body) = call(&app, "POST", "/sessions", Some(create_body())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["sessionId"], "session-1");
    assert_eq!(body["sceneGraph"]["marks"].as_array().unwrap().len(), 10);
    assert_eq!(body["sceneGraph"]["chartClass"], "groupedBar");
    assert!(body["svg"].as_str().unwrap().contains("<svg xmlns"));
    let (_, scene) = call(&app, "GET", &format!("{S}/scene"), None).await;
    assert_eq!(scene["sceneGraph"], body["sceneGraph"]);
    let (_, list) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(list["sessionIds"], json!(["session-1"]));
}

#[tokio::test]
async fn chart_validation_errors_are_422_with_codes() {
    let app = app();
    let mut body = create_body();
    body["chartSpec"]["encoding"]["y"]["field"] = json!("Gross");
    let (status, err) = call(&app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&err), "UnknownField");

    let mut body = create_body();
    body["chartSpec"]["mark"] = json!("area");
    let (status, err) = call(&app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&err), "UnsupportedMark");

    let (status, err) = call(&app, "POST", "/sessions", Some(json!({"chart": {}}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&err), "MalformedRequest");

    let body = json!({"chartSpec": read_json("chart.json")});
    let (status, err) = call(&app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&err), "NoData");
}

#[tokio::test]
async fn unknown_sessions_are_404() {
    let app = app();
    for (method, path) in [
        ("GET", "/sessions/nope"),
        ("POST", "/sessions/nope/group-all"),
        ("GET", "/sessions/nope/export"),
        ("DELETE", "/sessions/nope/cards"),
    ] {
        let (status, err) = call(&app, method, path, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{method} {path}");
        assert_eq!(error_code(&err), "UnknownSession");
    }
    let (status, err) = call(&app, "POST", "/sessions/nope/sketches", Some(stroke(0))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&err), "UnknownSession");
}

#[tokio::test]
async fn drama_stroke_makes_one_trend_card() {
    let app = app_with_session().await;
    let (status, body) = call(&app, "POST", &format!("{S}/sketches"), Some(stroke(0))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["highlightRowIds"], json!([5, 6, 7, 8, 9]));
    let cards = body["newCards"].as_array().unwrap();
    assert_eq!(cards.len(), 1);
    assert_eq!(cards[0]["facts"][0]["factType"], "trend");
    assert!(cards[0]["text"].as_str().unwrap().contains("decreased from 80 to 25"));
    assert_eq!(cards[0]["color"], body["sketch"]["color"]);
    assert_eq!(body["tree"][0], json!({"type": "card", "id": "c1"}));
    assert_eq!(body["groupId"], json!(null));
    assert_eq!(body["revision"], 1);
}

#[tokio::test]
async fn single_bar_circle_makes_a_group_of_three() {
    let app = app_with_session().await;
    let (status, body) = call(&app, "POST", &format!("{S}/sketches"), Some(stroke(4))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["highlightRowIds"], json!([1]));
    assert_eq!(body["newCards"].as_array().unwrap().len(), 3);
    assert_eq!(body["tree"].as_array().unwrap().len(), 1);
    let group = &body["tree"][0];
    assert_eq!(group["type"], "group");
    assert_eq!(group["id"], body["groupId"]);
    assert_eq!(group["label"], "Action (Genre) in 2007");
    assert_eq!(group["cards"], json!(["c1", "c2", "c3"]));
    assert_eq!(body["cards"]["c2"]["scopeLabel"], "vs. same Genre");
}

#[tokio::test]
async fn empty_lasso_is_409() {
    let app = app_with_session().await;
    let corner = json!({"points": [[2, 2], [30, 2], [30, 30], [2, 30], [2, 2]]});
    let (status, err) = call(&app, "POST", &format!("{S}/sketches"), Some(corner)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&err), "EmptySelection");
    let tap = json!({"points": [[100, 100], [101, 100]]});
    let (status, err) = call(&app, "POST", &format!("{S}/sketches"), Some(tap)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&err), "TooShort");
    let (_, session) = call(&app, "GET", S, None).await;
    assert_eq!(session["revision"], 0);
}

#[tokio::test]
async fn intents_make_grey_cards_without_sketches() {
    let app = app_with_session().await;
    let intent = json!({"filters": [{"field": "Year", "op": "=", "value": 2006}]});
    let (status, body) = call(&app, "POST", &format!("{S}/intents"), Some(intent)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["highlightRowIds"], json!([0, 5]));
    assert_eq!(body["sketch"], json!(null));
    assert_eq!(body["newCards"][0]["color"], "#999999");
    let none = json!({"filters": [{"field": "Year", "op": ">", "value": 2020}]});
    let (status, err) = call(&app, "POST", &format!("{S}/intents"), Some(none)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&err), "EmptySelection");
    let bad = json!({"filters": [{"field": "Budget", "op": "=", "value": 1}]});
    let (status, err) = call(&app, "POST", &format!("{S}/intents"), Some(bad)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&err), "UnknownField");
}

#[tokio::test]
async fn card_operations_follow_the_tree_rules() {
    let app = app_with_session().await;
    for i in 0..4 {
        call(&app, "POST", &format!("{S}/sketches"), Some(stroke(i))).await;
    }
    // [c4, c3, c2, c1]
    let (status, body) = call(
        &app,
        "POST",
        &format!("{S}/groups"),
        Some(json!({"cardIds": ["c2", "c1"]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let gid = body["groupId"].as_str().unwrap().to_string();
    assert_eq!(body["tree"][2]["cards"], json!(["c2", "c1"]));

    let (status, err) = call(
        &app,
        "POST",
        &format!("{S}/groups"),
        Some(json!({"cardIds": ["c1", "c3"]})),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&err), "AlreadyGrouped");
    let (status, err) = call(&app, "POST", &format!("{S}/groups"), Some(json!({"cardIds": ["c3"]}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&err), "TooFew");

    let (status, body) = call(
        &app,
        "POST",
        &format!("{S}/groups"),
        Some(json!({"cardIds": ["c4", "c3"]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let second = body["groupId"].as_str().unwrap().to_string();
    let into_group = json!({"move": {"id": gid, "target": {"group": second, "index": 0}}});
    let (status, err) = call(&app, "PATCH", &format!("{S}/tree"), Some(into_group)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&err), "InvalidTarget");

    let between = json!({"move": {"id": "c1", "target": {"group": second, "index": 2}}});
    let (status, body) = call(&app, "PATCH", &format!("{S}/tree"), Some(between)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["tree"][0]["cards"], json!(["c4", "c3", "c1"]));

    let (status, err) = call(&app, "DELETE", &format!("{S}/cards/c42"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&err), "UnknownCard");

    let (status, body) = call(&app, "DELETE", &format!("{S}/cards/c2"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["tree"].as_array().unwrap().len(), 1);
    assert_eq!(body["sketches"].as_array().unwrap().len(), 3);

    let (status, body) = call(&app, "DELETE", &format!("{S}/sketches/s4"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["cards"].get("c4").is_none());
    let (status, err) = call(&app, "DELETE", &format!("{S}/sketches/s4"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&err), "UnknownSketch");

    let (status, body) = call(&app, "POST", &format!("{S}/group-all"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["tree"][0]["cards"], json!(["c3", "c1"]));

    let (status, body) = call(&app, "DELETE", &format!("{S}/cards"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["tree"], json!([]));
    assert_eq!(body["sketches"], json!([]));
    assert_eq!(body["cards"], json!({}));
}

#[tokio::test]
async fn editing_recomputes_spans() {
    let app = app_with_session().await;
    call(&app, "POST", &format!("{S}/sketches"), Some(stroke(0))).await;
    let text = "Drama kept falling until 2010.";
    let (status, body) = call(&app, "PATCH", &format!("{S}/cards/c1"), Some(json!({"text": text}))).await;
    assert_eq!(status, StatusCode::OK);
    let card = &body["card"];
    assert_eq!(card["text"], text);
    assert_eq!(card["edited"], true);
    let spans: Vec<(usize, usize)> = card["spans"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            (
                s["start"].as_u64().unwrap() as usize,
                s["end"].as_u64().unwrap() as usize,
            )
        })
        .collect();
    let words: Vec<&str> = spans.iter().map(|&(a, b)| &text[a..b]).collect();
    assert!(words.contains(&"2010"));
    assert!(!words.iter().any(|w| w.contains("decreased")));
    let (status, _) = call(&app, "PATCH", &format!("{S}/cards/c1"), Some(json!({"text": ""}))).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn export_matches_the_docstore_rendering() {
    let app = app_with_session().await;
    for i in [0, 2] {
        call(&app, "POST", &format!("{S}/sketches"), Some(stroke(i))).await;
    }
    let (status, markdown) = call_raw(&app, "GET", &format!("{S}/export?format=markdown"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, file) = call_raw(&app, "GET", S, None).await;
    let session = Session::from_json(&file).unwrap();
    assert_eq!(markdown, export_markdown(&session));
    let (_, json_export) = call_raw(&app, "GET", &format!("{S}/export?format=json"), None).await;
    assert_eq!(json_export, file);
    let (status, err) = call(&app, "GET", &format!("{S}/export?format=pdf"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&err), "UnsupportedFormat");
}

#[tokio::test]
async fn failing_refiner_keeps_template_cards() {
    let plain = app_with_session().await;
    let (_, expected) = call(&plain, "POST", &format!("{S}/sketches"), Some(stroke(4))).await;

    let failing = StubRefiner(|_: &str| Err(RefineError::Status(503)));
    let state = AppState::new(SessionStore::in_memory()).with_refiner(Arc::new(failing), 64);
    let app = router(state, RouterOptions::default());
    call(&app, "POST", "/sessions", Some(create_body())).await;
    let (status, body) = call(&app, "POST", &format!("{S}/sketches"), Some(stroke(4))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["cards"], expected["cards"]);
    assert_eq!(body["warnings"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn static_files_are_served_outside_the_api() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>panel</html>").unwrap();
    let options = RouterOptions {
        static_dir: Some(dir.path().to_path_buf()),
        ..RouterOptions::default()
    };
    let app = router(AppState::new(SessionStore::in_memory()), options);
    let (status, text) = call_raw(&app, "GET", "/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, "<html>panel</html>");
    let (status, text) = call_raw(&app, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, "<html>panel</html>");
    let (status, _) = call(&app, "POST", "/sessions", Some(create_body())).await;
    assert_eq!(status, StatusCode::OK);
}

/// Every documented path and method reaches an API handler.
#[tokio::test]
async fn documented_routes_are_served() {
    let spec = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/openapi.yaml")).unwrap();
    let mut operations = Vec::new();
    let mut path = None;
    for line in spec.lines() {
        if let Some(p) = line.strip_prefix("  /") {
            path = Some(format!("/{}", p.trim_end_matches(':')));
        } else if line.starts_with("  ") && !line.starts_with("   ") {
            path = None;
        } else if let (Some(p), Some(m)) = (&path, line.strip_prefix("    ")) {
            let m = m.trim_end_matches(':');
            if ["get", "post", "patch", "delete"].contains(&m) {
                operations.push((m.to_uppercase(), p.clone()));
            }
        }
    }
    assert_eq!(operations.len(), 14, "{operations:?}");
    let app = app_with_session().await;
    call(&app, "POST", &format!("{S}/sketches"), Some(stroke(0))).await;
    for (method, p) in operations {
        let concrete = p
            .replace("{id}", "session-1")
            .replace("{cardId}", "c1")
            .replace("{sketchId}", "s1");
        let (status, text) = call_raw(&app, &method, &concrete, Some(json!({}))).await;
        assert_ne!(status, StatusCode::METHOD_NOT_ALLOWED, "{method} {p}");
        let served_by_api = serde_json::from_str::<serde_json::Value>(&text).is_ok() || text.starts_with('#');
        assert!(served_by_api, "{method} {p} answered {status}: {text}");
    }
}
