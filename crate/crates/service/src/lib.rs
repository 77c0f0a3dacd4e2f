//! HTTP API over documentation sessions.
//!
//! Every session owns a chart and a card tree. Strokes and intents posted to
//! a session become cards; card operations edit the tree. Sessions are
//! serialized per session and optionally mirrored to a directory, and
//! mutating requests can be logged for replay.

pub mod error;
pub mod record;
mod routes;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::middleware::from_fn_with_state;
use axum::routing::{delete, get, patch, post};
use axum::Router;
use sketchdoc::nlg::{HttpRefiner, RefineError, Refiner, RefinerConfig};
use sketchdoc::sketch::SketchOptions;
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use record::{read_log, replay, RecordedRequest, Recorder};
pub use store::{SessionEntry, SessionStore, StoreError};

/// Shared request state.
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub refiner: Option<Arc<dyn Refiner>>,
    pub max_tokens: u32,
    pub sketch_options: SketchOptions,
}

impl AppState {
    pub fn new(store: SessionStore) -> AppState {
        AppState {
            store: Arc::new(store),
            refiner: None,
            max_tokens: RefinerConfig::DEFAULT_MAX_TOKENS,
            sketch_options: SketchOptions::default(),
        }
    }

    pub fn with_refiner(mut self, refiner: Arc<dyn Refiner>, max_tokens: u32) -> AppState {
        self.refiner = Some(refiner);
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_http_refiner(self, config: RefinerConfig) -> Result<AppState, RefineError> {
        let max_tokens = config.max_tokens;
        let refiner = HttpRefiner::new(config)?;
        Ok(self.with_refiner(Arc::new(refiner), max_tokens))
    }
}

/// Optional extras around the API routes.
#[derive(Default)]
pub struct RouterOptions {
    /// Directory served for paths outside the API.
    pub static_dir: Option<PathBuf>,
    pub recorder: Option<Arc<Recorder>>,
}

pub fn router(state: AppState, options: RouterOptions) -> Router {
    let mut api = Router::new()
        .route("/sessions", post(routes::create_session).get(routes::list_sessions))
        .route("/sessions/{id}", get(routes::get_session))
        .route("/sessions/{id}/scene", get(routes::get_scene))
        .route("/sessions/{id}/sketches", post(routes::post_sketch))
        .route("/sessions/{id}/sketches/{sketch_id}", delete(routes::delete_sketch))
        .route("/sessions/{id}/intents", post(routes::post_intent))
        .route("/sessions/{id}/cards", delete(routes::delete_all))
        .route(
            "/sessions/{id}/cards/{card_id}",
            delete(routes::delete_card).patch(routes::edit_card),
        )
        .route("/sessions/{id}/groups", post(routes::group_cards))
        .route("/sessions/{id}/group-all", post(routes::group_all))
        .route("/sessions/{id}/tree", patch(routes::move_node))
        .route("/sessions/{id}/export", get(routes::export));
    if let Some(recorder) = options.recorder {
        api = api.layer(from_fn_with_state(recorder, record::record));
    }
    let app = api.with_state(state);
    match options.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Binds `addr` and serves until the process stops.
pub async fn serve(app: Router, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
