//! HTTP access to one workbook, with a push stream of change patches.
//!
//! | Route | |
//! | --- | --- |
//! | `GET /api/workbook` | every table with values, plus the version |
//! | `GET /api/table/{name}` | one table |
//! | `POST /api/edit` | apply an [`EditCommand`]; `200` with a [`ChangePatch`], `409` when `expected_version` is stale, `422` when the engine rejects the edit |
//! | `GET /api/updates` | server-sent events, one `patch` event per applied edit |
//!
//! Edits are applied one at a time. Each applied edit increments the
//! version by one, is saved to the workbook file, and is broadcast to every
//! subscriber in application order.

mod command;
mod session;
mod view;

use std::convert::Infallible;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fieldsheet_core::ErrorCode;
use futures::Stream;
use serde_json::json;
use tokio::sync::broadcast;

pub use command::{apply, Edit, EditCommand, Rejection};
pub use session::{CellPatch, ChangePatch, EditError, Session, StructuralChange};
pub use view::{
    table_view, workbook_view, CellView, FieldRef, FieldView, LinkView, RowView, TableView,
    WorkbookView,
};

const UPDATE_BUFFER: usize = 1024;

pub struct AppState {
    session: Mutex<Session>,
    updates: broadcast::Sender<Arc<ChangePatch>>,
}

impl AppState {
    pub fn new(session: Session) -> Arc<Self> {
        let (updates, _) = broadcast::channel(UPDATE_BUFFER);
        Arc::new(AppState {
            session: Mutex::new(session),
            updates,
        })
    }

    /// Receives every patch applied from now on.
    pub fn subscribe(&self) -> broadcast::Receiver<Arc<ChangePatch>> {
        self.updates.subscribe()
    }

    pub fn version(&self) -> u64 {
        self.lock().version()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Applies a command and broadcasts its patch while still holding the
    /// session, so the stream order is the application order.
    pub fn edit(&self, command: &EditCommand) -> Result<ChangePatch, EditError> {
        let mut session = self.lock();
        let patch = session.apply(command)?;
        let _ = self.updates.send(Arc::new(patch.clone()));
        Ok(patch)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/workbook", get(get_workbook))
        .route("/api/table/{name}", get(get_table))
        .route("/api/edit", post(post_edit))
        .route("/api/updates", get(get_updates))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(session: Session, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(AppState::new(session))).await
}

fn error_body(status: StatusCode, code: &str, message: String, version: u64) -> Response {
    let body = json!({ "error": { "code": code, "message": message }, "version": version });
    (status, Json(body)).into_response()
}

async fn get_workbook(State(state): State<Arc<AppState>>) -> Json<WorkbookView> {
    let session = state.lock();
    Json(workbook_view(session.workbook(), session.version()))
}

async fn get_table(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> Response {
    let session = state.lock();
    match session.workbook().table(&name) {
        Some(t) => Json(table_view(session.workbook(), t)).into_response(),
        None => error_body(
            StatusCode::NOT_FOUND,
            ErrorCode::Ref.as_str(),
            format!("unknown table `{name}`"),
            session.version(),
        ),
    }
}

async fn post_edit(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let command: EditCommand = match serde_json::from_slice(&body) {
        Ok(c) => c,
        Err(e) => {
            return error_body(
                StatusCode::BAD_REQUEST,
                ErrorCode::Parse.as_str(),
                e.to_string(),
                state.version(),
            )
        }
    };
    match state.edit(&command) {
        Ok(patch) => Json(patch).into_response(),
        Err(EditError::Stale { current, .. }) => error_body(
            StatusCode::CONFLICT,
            "stale",
            format!("expected version {}, current is {current}", command.expected_version),
            current,
        ),
        Err(EditError::Rejected(r)) => error_body(
            StatusCode::UNPROCESSABLE_ENTITY,
            r.code.as_str(),
            r.message,
            state.version(),
        ),
        Err(e @ EditError::Save(_)) => error_body(
            StatusCode::INTERNAL_SERVER_ERROR,
            "save",
            e.to_string(),
            state.version(),
        ),
    }
}

async fn get_updates(
    State(state): State<Arc<AppState>>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let rx = state.subscribe();
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        let event = match rx.recv().await {
            Ok(patch) => Event::default()
                .event("patch")
                .id(patch.version.to_string())
                .json_data(&*patch)
                .expect("patch serializes"),
            Err(broadcast::error::RecvError::Lagged(_)) => {
                Event::default().event("resync").data("refetch /api/workbook")
            }
            Err(broadcast::error::RecvError::Closed) => return None,
        };
        Some((Ok(event), rx))
    });
    Sse::new(stream).keep_alive(KeepAlive::default())
}
