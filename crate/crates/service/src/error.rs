use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use sketchdoc::docstore::DocError;
use sketchdoc::PipelineError;
use thiserror::Error;

use crate::store::StoreError;

/// A failed request: HTTP status plus a stable code for clients.
#[derive(Debug, Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn unknown_session(id: &str) -> ApiError {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownSession",
            format!("unknown session `{id}`"),
        )
    }

    pub fn malformed(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "MalformedRequest", message)
    }
}

fn status_of(err: &PipelineError) -> StatusCode {
    if err.is_empty_outcome() {
        return StatusCode::CONFLICT;
    }
    match err {
        PipelineError::Doc(DocError::UnknownCard(_) | DocError::UnknownGroup(_) | DocError::UnknownSketch(_)) => {
            StatusCode::NOT_FOUND
        }
        PipelineError::Doc(DocError::Malformed(_)) | PipelineError::Fact(_) => StatusCode::INTERNAL_SERVER_ERROR,
        PipelineError::Doc(_) => StatusCode::CONFLICT,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

impl From<PipelineError> for ApiError {
    fn from(err: PipelineError) -> ApiError {
        ApiError {
            status: status_of(&err),
            code: err.code().to_string(),
            message: err.to_string(),
        }
    }
}

impl From<DocError> for ApiError {
    fn from(err: DocError) -> ApiError {
        PipelineError::from(err).into()
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> ApiError {
        log::error!("session store: {err}");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageFailure", err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}
