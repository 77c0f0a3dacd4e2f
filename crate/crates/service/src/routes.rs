use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use sketchdoc::docstore::{export_markdown, MoveTarget, Session};
use sketchdoc::geometry::Point;
use sketchdoc::pipeline::{
    commit_findings, findings_for_intent, findings_for_stroke, refine_findings, Findings, Refinement, Submission,
};
use sketchdoc::{PreparedChart, Viewport};

use crate::error::ApiError;
use crate::store::SessionEntry;
use crate::AppState;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

impl AppState {
    fn entry(&self, id: &str) -> Result<Arc<SessionEntry>, ApiError> {
        self.store.get(id).ok_or_else(|| ApiError::unknown_session(id))
    }

    async fn refine(&self, findings: Findings) -> Findings {
        let Some(refiner) = self.refiner.clone() else {
            return findings;
        };
        let max_tokens = self.max_tokens;
        let mut findings = findings;
        let task = tokio::task::spawn_blocking(move || {
            refine_findings(
                &mut findings,
                Refinement {
                    refiner: refiner.as_ref(),
                    max_tokens,
                },
            );
            findings
        });
        task.await.expect("refinement task panicked")
    }
}

/// Tree, cards and sketches of a session: the state a client mirrors.
fn state_view(session: &Session) -> Map<String, Value> {
    let mut view = Map::new();
    view.insert("sessionId".into(), json!(session.id));
    view.insert("revision".into(), json!(session.revision));
    view.insert("tree".into(), json!(session.tree));
    view.insert("cards".into(), json!(session.cards));
    view.insert("sketches".into(), json!(session.sketches));
    view
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateRequest {
    chart_spec: Value,
    #[serde(default)]
    data: Option<Vec<Value>>,
    #[serde(default)]
    viewport: Option<ViewportSize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewportSize {
    width: f64,
    height: f64,
}

pub(crate) async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let viewport = req
        .viewport
        .map_or_else(Viewport::default, |v| Viewport::with_size(v.width, v.height));
    let chart = PreparedChart::new(&req.chart_spec, req.data, &viewport)?;
    let (id, entry) = state.store.create(chart)?;
    log::info!("created {id}");
    Ok(Json(json!({
        "sessionId": id,
        "sceneGraph": entry.chart.scene,
        "svg": entry.chart.svg(),
    })))
}

pub(crate) async fn list_sessions(State(state): State<AppState>) -> Json<Value> {
    Json(json!({"sessionIds": state.store.ids()}))
}

pub(crate) async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.entry(&id)?;
    let text = entry.session.lock().await.to_json();
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

pub(crate) async fn get_scene(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let entry = state.entry(&id)?;
    Ok(Json(json!({"sceneGraph": entry.chart.scene, "svg": entry.chart.svg()})))
}

fn submission_view(session: &Session, findings: &Findings, submission: &Submission) -> Value {
    let mut view = state_view(session);
    let sketch = submission
        .sketch_id
        .as_ref()
        .and_then(|sid| session.sketches.iter().find(|s| &s.id == sid));
    let cards: Vec<_> = submission
        .card_ids
        .iter()
        .filter_map(|id| session.cards.get(id))
        .collect();
    view.insert("selection".into(), json!(findings.selection));
    view.insert("highlightRowIds".into(), json!(findings.selection.rows));
    view.insert("sketch".into(), json!(sketch));
    view.insert("newCards".into(), json!(cards));
    view.insert("groupId".into(), json!(submission.group_id));
    view.insert("warnings".into(), json!(findings.warnings));
    Value::Object(view)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SketchRequest {
    points: Vec<Point>,
}

pub(crate) async fn post_sketch(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: SketchRequest = parse_body(&body)?;
    let entry = state.entry(&id)?;
    let findings = findings_for_stroke(&entry.chart, &req.points, &state.sketch_options)?;
    let findings = state.refine(findings).await;
    let mut session = entry.session.lock().await;
    let submission = commit_findings(&mut session, Some(req.points), &findings);
    state.store.persist(&session)?;
    Ok(Json(submission_view(&session, &findings, &submission)))
}

pub(crate) async fn post_intent(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let intent: Value = parse_body(&body)?;
    let entry = state.entry(&id)?;
    let findings = findings_for_intent(&entry.chart, &intent)?;
    let findings = state.refine(findings).await;
    let mut session = entry.session.lock().await;
    let submission = commit_findings(&mut session, None, &findings);
    state.store.persist(&session)?;
    Ok(Json(submission_view(&session, &findings, &submission)))
}

/// Runs one docstore operation under the session lock and persists the
/// result. `extra` fields are merged into the state view.
async fn mutate<F>(state: &AppState, id: &str, op: F) -> Result<Json<Value>, ApiError>
where
    F: FnOnce(&mut Session) -> Result<Map<String, Value>, ApiError>,
{
    let entry = state.entry(id)?;
    let mut session = entry.session.lock().await;
    let extra = op(&mut session)?;
    state.store.persist(&session)?;
    let mut view = state_view(&session);
    view.extend(extra);
    Ok(Json(Value::Object(view)))
}

pub(crate) async fn delete_sketch(
    State(state): State<AppState>,
    Path((id, sketch_id)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    mutate(&state, &id, |s| {
        s.delete_sketch(&sketch_id)?;
        Ok(Map::new())
    })
    .await
}

pub(crate) async fn delete_card(
    State(state): State<AppState>,
    Path((id, card_id)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    mutate(&state, &id, |s| {
        s.delete_card(&card_id)?;
        Ok(Map::new())
    })
    .await
}

pub(crate) async fn delete_all(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    mutate(&state, &id, |s| {
        s.delete_all();
        Ok(Map::new())
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct GroupRequest {
    card_ids: Vec<String>,
}

pub(crate) async fn group_cards(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: GroupRequest = parse_body(&body)?;
    mutate(&state, &id, |s| {
        let gid = s.group_cards(&req.card_ids)?;
        Ok(Map::from_iter([("groupId".to_string(), json!(gid))]))
    })
    .await
}

pub(crate) async fn group_all(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    mutate(&state, &id, |s| {
        let gid = s.group_all()?;
        Ok(Map::from_iter([("groupId".to_string(), json!(gid))]))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EditRequest {
    text: String,
}

pub(crate) async fn edit_card(
    State(state): State<AppState>,
    Path((id, card_id)): Path<(String, String)>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: EditRequest = parse_body(&body)?;
    mutate(&state, &id, |s| {
        s.edit_card(&card_id, &req.text)?;
        Ok(Map::from_iter([("card".to_string(), json!(s.cards[&card_id]))]))
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveRequest {
    #[serde(rename = "move")]
    movement: Movement,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Movement {
    id: String,
    target: MoveTarget,
}

pub(crate) async fn move_node(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: MoveRequest = parse_body(&body)?;
    mutate(&state, &id, |s| {
        s.move_node(&req.movement.id, &req.movement.target)?;
        Ok(Map::new())
    })
    .await
}

#[derive(Deserialize)]
pub(crate) struct ExportQuery {
    format: Option<String>,
}

pub(crate) async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let entry = state.entry(&id)?;
    let session = entry.session.lock().await;
    match query.format.as_deref().unwrap_or("markdown") {
        "markdown" | "md" => Ok((
            [(header::CONTENT_TYPE, "text/markdown; charset=utf-8")],
            export_markdown(&session),
        )
            .into_response()),
        "json" => Ok(([(header::CONTENT_TYPE, "application/json")], session.to_json()).into_response()),
        other => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "UnsupportedFormat",
            format!("unsupported export format `{other}`"),
        )),
    }
}
