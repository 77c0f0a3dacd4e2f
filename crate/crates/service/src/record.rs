//! Request logs: every mutating request as JSON Lines, and replay of such
//! a log against a fresh router.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::{to_bytes, Body};
use axum::extract::{Request, State};
use axum::http::{Method, StatusCode};
use axum::middleware::Next;
use axum::response::Response;
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower::ServiceExt;

use crate::error::ApiError;

/// Largest request body buffered for recording.
pub const MAX_RECORDED_BODY: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedRequest {
    pub method: String,
    pub path: String,
    #[serde(default)]
    pub body: Value,
    /// Status the live service answered with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
}

pub struct Recorder {
    file: Mutex<File>,
}

impl Recorder {
    /// Appends to `path`, creating it if needed.
    pub fn create(path: &Path) -> io::Result<Recorder> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Recorder { file: Mutex::new(file) })
    }

    fn append(&self, entry: &RecordedRequest) -> io::Result<()> {
        let mut line = serde_json::to_string(entry).map_err(io::Error::other)?;
        line.push('\n');
        let mut file = self.file.lock().expect("recorder lock");
        file.write_all(line.as_bytes())?;
        file.flush()
    }
}

pub(crate) async fn record(
    State(recorder): State<Arc<Recorder>>,
    req: Request,
    next: Next,
) -> Result<Response, ApiError> {
    if req.method() == Method::GET || req.method() == Method::HEAD {
        return Ok(next.run(req).await);
    }
    let (parts, body) = req.into_parts();
    let bytes = to_bytes(body, MAX_RECORDED_BODY)
        .await
        .map_err(|e| ApiError::malformed(format!("unreadable body: {e}")))?;
    let body_value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into_owned()))
    };
    let path = parts
        .uri
        .path_and_query()
        .map_or_else(|| parts.uri.path().to_string(), |p| p.to_string());
    let method = parts.method.to_string();
    let response = next.run(Request::from_parts(parts, Body::from(bytes))).await;
    let entry = RecordedRequest {
        method,
        path,
        body: body_value,
        status: Some(response.status().as_u16()),
    };
    if let Err(e) = recorder.append(&entry) {
        log::error!("request log: {e}");
    }
    Ok(response)
}

/// Parses a JSON Lines request log; blank lines are skipped.
pub fn read_log(text: &str) -> Result<Vec<RecordedRequest>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Sends each request to `app` in order and returns the statuses.
pub async fn replay(app: Router, log: &[RecordedRequest]) -> Result<Vec<StatusCode>, ApiError> {
    let mut statuses = Vec::with_capacity(log.len());
    for entry in log {
        let method = Method::from_bytes(entry.method.as_bytes())
            .map_err(|_| ApiError::malformed(format!("bad method `{}`", entry.method)))?;
        let body = match &entry.body {
            Value::Null => Body::empty(),
            Value::String(s) => Body::from(s.clone()),
            other => Body::from(other.to_string()),
        };
        let request = Request::builder()
            .method(method)
            .uri(&entry.path)
            .header("content-type", "application/json")
            .body(body)
            .map_err(|e| ApiError::malformed(e.to_string()))?;
        let response = app.clone().oneshot(request).await.expect("router is infallible");
        statuses.push(response.status());
    }
    Ok(statuses)
}
