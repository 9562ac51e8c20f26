//! HTTP routes over sessions.
//!
//! Each session sits behind its own mutex and every operation on it runs on
//! the blocking pool, so operations on one session are serialized while
//! different sessions proceed independently. `GET /sessions/{id}` reads a
//! snapshot refreshed after each operation and never waits on the mutex.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use acluster_core::Query;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query as UrlQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::error::{ServiceError, ServiceResult};
use crate::session::{CreateSession, Export, NextResponse, Session, SessionMeta, SessionView, SubmitResponse};
use crate::store::Store;

/// Token used when a request names no annotator.
pub const DEFAULT_ANNOTATOR: &str = "default";

struct Entry {
    session: Mutex<Session>,
    view: RwLock<Arc<SessionView>>,
}

struct Inner {
    store: Store,
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        AppState {
            inner: Arc::new(Inner {
                store,
                sessions: RwLock::new(HashMap::new()),
            }),
        }
    }

    pub fn open(data_dir: impl Into<PathBuf>) -> ServiceResult<Self> {
        Ok(AppState::new(Store::open(data_dir)?))
    }

    pub fn store(&self) -> &Store {
        &self.inner.store
    }

    fn insert(&self, session: Session) -> Arc<Entry> {
        let mut session = session;
        let view = Arc::new(session.view());
        let id = session.id().to_string();
        let entry = Arc::new(Entry {
            session: Mutex::new(session),
            view: RwLock::new(view),
        });
        let mut map = self.inner.sessions.write().expect("session map poisoned");
        map.entry(id).or_insert(entry).clone()
    }

    /// The cached session, loading and replaying it from disk on first use.
    fn entry(&self, id: &str) -> ServiceResult<Arc<Entry>> {
        if let Some(e) = self.inner.sessions.read().expect("session map poisoned").get(id) {
            return Ok(e.clone());
        }
        let stored = self
            .inner
            .store
            .load(id)?
            .ok_or_else(|| ServiceError::NotFound(format!("no session `{id}`")))?;
        let session = Session::restore(stored.meta, &stored.log, stored.assignments, stored.labels)?;
        Ok(self.insert(session))
    }

    fn evict(&self, id: &str) {
        self.inner.sessions.write().expect("session map poisoned").remove(id);
    }

    /// Runs `op` on the session with exclusive access, then refreshes its
    /// snapshot. A storage failure evicts the session so that the next
    /// request re-derives it from what actually reached the disk.
    async fn with_session<T, F>(&self, id: String, op: F) -> ServiceResult<T>
    where
        T: Send + 'static,
        F: FnOnce(&mut Session, &Store) -> ServiceResult<T> + Send + 'static,
    {
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let entry = state.entry(&id)?;
            let mut s = entry.session.lock().map_err(|_| ServiceError::Internal("session lock poisoned".into()))?;
            let out = op(&mut s, &state.inner.store);
            if let Err(ServiceError::Storage(m)) = &out {
                log::error!("session {id}: {m}");
                drop(s);
                state.evict(&id);
                return out;
            }
            *entry.view.write().expect("view poisoned") = Arc::new(s.view());
            out
        })
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
    }

    async fn snapshot(&self, id: String) -> ServiceResult<Arc<SessionView>> {
        let state = self.clone();
        tokio::task::spawn_blocking(move || {
            let entry = state.entry(&id)?;
            let view = entry.view.read().expect("view poisoned").clone();
            Ok(view)
        })
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
    }
}

#[derive(Debug, Clone, Default)]
pub struct AppOptions {
    /// Directory of static assets served under `/`.
    pub static_dir: Option<PathBuf>,
    /// Allow cross-origin requests.
    pub cors: bool,
}

pub fn router(state: AppState) -> Router {
    app(state, AppOptions::default())
}

pub fn app(state: AppState, opts: AppOptions) -> Router {
    let mut r = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_query))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/labels", post(set_labels))
        .route("/sessions/{id}/export", get(export))
        .with_state(state);
    if let Some(dir) = opts.static_dir {
        r = r.fallback_service(ServeDir::new(dir));
    }
    if opts.cors {
        r = r.layer(CorsLayer::permissive());
    }
    r
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr, state: AppState, opts: AppOptions) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state, opts)).await
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ServiceResult<T> {
    b.map(|Json(t)| t).map_err(|e| ServiceError::Validation(e.body_text()))
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    let v = headers.get(header::AUTHORIZATION)?.to_str().ok()?;
    let t = v.strip_prefix("Bearer ")?.trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// The annotator token: explicit value, else the bearer token, else the default.
fn annotator(explicit: Option<String>, headers: &HeaderMap) -> String {
    explicit
        .filter(|t| !t.is_empty())
        .or_else(|| bearer(headers))
        .unwrap_or_else(|| DEFAULT_ANNOTATOR.to_string())
}

async fn create_session(
    State(state): State<AppState>,
    req: Result<Json<CreateSession>, JsonRejection>,
) -> ServiceResult<impl IntoResponse> {
    let req = body(req)?;
    let meta = SessionMeta {
        id: uuid::Uuid::new_v4().simple().to_string(),
        items: req.items,
        strategy: req.strategy,
        plan: req.plan,
        seed: req.seed.unwrap_or_else(rand::random),
    };
    let st = state.clone();
    let view = tokio::task::spawn_blocking(move || {
        let mut session = Session::new(meta.clone())?;
        st.store().create(&meta)?;
        let view = session.view();
        st.insert(session);
        Ok::<_, ServiceError>(view)
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    log::info!("created session {} with {} items", view.id, view.n);
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Json<SessionView>> {
    Ok(Json(state.snapshot(id).await?.as_ref().clone()))
}

#[derive(Debug, Deserialize)]
struct NextParams {
    annotator: Option<String>,
}

async fn next_query(
    State(state): State<AppState>,
    Path(id): Path<String>,
    params: Result<UrlQuery<NextParams>, QueryRejection>,
    headers: HeaderMap,
) -> ServiceResult<Json<NextResponse>> {
    let UrlQuery(params) = params.map_err(|e| ServiceError::Validation(e.body_text()))?;
    let token = annotator(params.annotator, &headers);
    let r = state
        .with_session(id.clone(), move |s, store| {
            let before = s.assignments().clone();
            let r = s.next(&token)?;
            if *s.assignments() != before {
                store.write_assignments(&id, s.assignments())?;
            }
            Ok(r)
        })
        .await?;
    Ok(Json(r))
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    u: usize,
    v: usize,
    positive: bool,
    #[serde(default)]
    annotator: Option<String>,
}

async fn submit_answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    req: Result<Json<AnswerBody>, JsonRejection>,
) -> ServiceResult<Json<SubmitResponse>> {
    let req = body(req)?;
    let token = annotator(req.annotator, &headers);
    let r = state
        .with_session(id.clone(), move |s, store| {
            let before = s.assignments().clone();
            let out = s.submit(&token, Query { u: req.u, v: req.v }, req.positive)?;
            store.append(&id, &out.appended)?;
            if *s.assignments() != before {
                store.write_assignments(&id, s.assignments())?;
            }
            Ok(out.response)
        })
        .await?;
    Ok(Json(r))
}

#[derive(Debug, Deserialize)]
struct LabelsBody {
    labels: BTreeMap<String, String>,
}

async fn set_labels(
    State(state): State<AppState>,
    Path(id): Path<String>,
    req: Result<Json<LabelsBody>, JsonRejection>,
) -> ServiceResult<Json<Export>> {
    let req = body(req)?;
    let r = state
        .with_session(id.clone(), move |s, store| {
            let ex = s.set_labels(req.labels)?;
            let labels = s.labels().expect("labels were just set").clone();
            store.write_labels(&id, &labels)?;
            Ok(ex)
        })
        .await?;
    Ok(Json(r))
}

async fn export(State(state): State<AppState>, Path(id): Path<String>) -> ServiceResult<Json<Export>> {
    Ok(Json(state.with_session(id, |s, _| s.export()).await?))
}
