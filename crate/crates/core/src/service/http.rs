use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use futures::stream::{self, Stream, StreamExt};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use crate::perception::{CellImage, CELL_PIXELS};

use super::session::{Event, Models, Session, SessionError};

/// Idle sessions are dropped after this long.
pub const SESSION_TTL: Duration = Duration::from_secs(30 * 60);

struct Entry {
    session: Session,
    tx: broadcast::Sender<Event>,
    touched: Instant,
}

/// Session registry shared by all handlers.
#[derive(Clone)]
pub struct AppState {
    models: Arc<Models>,
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Entry>>>>>,
    ttl: Duration,
}

impl AppState {
    pub fn new(models: Arc<Models>) -> Self {
        Self::with_ttl(models, SESSION_TTL)
    }

    pub fn with_ttl(models: Arc<Models>, ttl: Duration) -> Self {
        Self {
            models,
            sessions: Arc::default(),
            ttl,
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    /// Drops sessions idle for longer than the TTL; returns how many went.
    pub fn sweep(&self) -> usize {
        let mut map = self.sessions.lock().unwrap();
        let before = map.len();
        let ttl = self.ttl;
        map.retain(|_, e| e.lock().unwrap().touched.elapsed() < ttl);
        before - map.len()
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn create(&self) -> (String, Vec<Event>) {
        let mut raw = [0u8; 16];
        rand::thread_rng().fill_bytes(&mut raw);
        let id = hex::encode(raw);
        let seed = u64::from_le_bytes(raw[..8].try_into().unwrap());
        let session = Session::new(id.clone(), self.models.clone(), seed);
        let events = session.events_after(0).to_vec();
        let (tx, _) = broadcast::channel(256);
        let entry = Entry {
            session,
            tx,
            touched: Instant::now(),
        };
        self.sessions
            .lock()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(entry)));
        (id, events)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            message: format!("no session {id}"),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::TurnViolation | SessionError::Closed | SessionError::Occupied(_) => {
                StatusCode::CONFLICT
            }
            SessionError::BadCell(_) => StatusCode::BAD_REQUEST,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub events: Vec<Event>,
}

/// Body of a raster tick: cell index and base64 of 1600 row-major bytes.
#[derive(Debug, Serialize, Deserialize)]
pub struct RasterRequest {
    pub cell: usize,
    pub pixels: String,
}

/// Out-of-range confidences are clamped, not refused.
#[derive(Debug, Serialize, Deserialize)]
pub struct UtteranceRequest {
    pub text: String,
    #[serde(default)]
    pub confidence: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UtteranceAck {
    pub events: Vec<Event>,
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    #[serde(default)]
    pub from: u64,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(snapshot).delete(close_session))
        .route("/sessions/{id}/raster", post(raster))
        .route("/sessions/{id}/utterance", post(utterance))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}

/// Serves until ctrl-c, sweeping idle sessions once a minute.
pub async fn serve(state: AppState, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            let n = sweeper.sweep();
            if n > 0 {
                log::info!("expired {n} idle sessions");
            }
        }
    });
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn create_session(State(state): State<AppState>) -> (StatusCode, Json<CreatedSession>) {
    let (session_id, events) = state.create();
    (StatusCode::CREATED, Json(CreatedSession { session_id, events }))
}

async fn snapshot(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let entry = state.entry(&id)?;
    let mut e = entry.lock().unwrap();
    e.touched = Instant::now();
    Ok(Json(e.session.snapshot()))
}

async fn close_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    state
        .sessions
        .lock()
        .unwrap()
        .remove(&id)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or_else(|| ApiError::not_found(&id))
}

fn publish(e: &Entry, events: &[Event]) {
    for ev in events {
        let _ = e.tx.send(ev.clone());
    }
}

async fn raster(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RasterRequest>,
) -> Result<impl IntoResponse, ApiError> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(req.pixels.as_bytes())
        .map_err(|e| ApiError::bad_request(format!("pixels are not base64: {e}")))?;
    if bytes.len() != CELL_PIXELS {
        return Err(ApiError::bad_request(format!(
            "raster needs {CELL_PIXELS} bytes, got {}",
            bytes.len()
        )));
    }
    let image = CellImage::from_bytes(&bytes).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let entry = state.entry(&id)?;
    let mut e = entry.lock().unwrap();
    e.touched = Instant::now();
    let ack = e.session.submit_raster(req.cell, &image)?;
    publish(&e, &ack.events);
    Ok(Json(ack))
}

async fn utterance(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<UtteranceRequest>,
) -> Result<impl IntoResponse, ApiError> {
    let entry = state.entry(&id)?;
    let mut e = entry.lock().unwrap();
    e.touched = Instant::now();
    let events = e.session.submit_utterance(&req.text, req.confidence)?;
    publish(&e, &events);
    Ok(Json(UtteranceAck { events }))
}

fn sse_event(ev: &Event) -> SseEvent {
    SseEvent::default()
        .id(ev.seq.to_string())
        .event(ev.kind.name())
        .json_data(ev)
        .expect("events serialize")
}

/// Backlog after `from`, then live events, without duplicates.
async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>, ApiError> {
    let entry = state.entry(&id)?;
    let (backlog, rx) = {
        let e = entry.lock().unwrap();
        (e.session.events_after(q.from).to_vec(), e.tx.subscribe())
    };
    let mut last = backlog.last().map_or(q.from, |ev| ev.seq);
    let live = stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(ev) => return Some((ev, rx)),
                Err(broadcast::error::RecvError::Lagged(n)) => log::warn!("event stream lagged by {n}"),
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    })
    .filter(move |ev| {
        let fresh = ev.seq > last;
        if fresh {
            last = ev.seq;
        }
        futures::future::ready(fresh)
    });
    let out = stream::iter(backlog).chain(live).map(|ev| Ok(sse_event(&ev)));
    Ok(Sse::new(out).keep_alive(KeepAlive::default()))
}
