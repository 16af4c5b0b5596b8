//! Read-only HTTP/JSON service over a series store.
//!
//! Endpoints: `GET /api/series`, `GET /api/suggest`, `GET /api/manifest`.
//! Optionally serves a directory of static UI assets at `/`.

pub mod api;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use lexitrend_core::store::Store;

use crate::api::{ApiError, ErrorBody, SeriesQuery, SuggestQuery, SuggestResponse};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] lexitrend_core::Error),
    #[error("invalid --cors-origin {0:?}")]
    CorsOrigin(String),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    pub store: Store,
    manifest_json: Vec<u8>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        let manifest_json = serde_json::to_vec(store.manifest()).expect("manifest serializes");
        AppState { store, manifest_json }
    }
}

fn json_bytes(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn json<T: Serialize>(status: StatusCode, value: &T) -> Response {
    match serde_json::to_vec(value) {
        Ok(body) => json_bytes(status, body),
        Err(e) => error_response(ApiError::internal(e.to_string())),
    }
}

fn error_response(e: ApiError) -> Response {
    let body = ErrorBody {
        error: &e.message,
        words: &e.words,
    };
    let bytes = serde_json::to_vec(&body).unwrap_or_else(|_| b"{\"error\":\"internal error\"}".to_vec());
    json_bytes(e.status, bytes)
}

type Params = Query<Vec<(String, String)>>;

async fn series(State(state): State<Arc<AppState>>, Query(params): Params) -> Response {
    let result = SeriesQuery::parse(&params, state.store.buckets()).and_then(|q| api::series(&state.store, &q));
    match result {
        Ok(resp) => json(StatusCode::OK, &resp),
        Err(e) => error_response(e),
    }
}

async fn suggest(State(state): State<Arc<AppState>>, Query(params): Params) -> Response {
    match SuggestQuery::parse(&params) {
        Ok(q) => json(
            StatusCode::OK,
            &SuggestResponse {
                suggestions: state.store.prefix_search(&q.q, q.limit),
                query: q.q,
            },
        ),
        Err(e) => error_response(e),
    }
}

async fn manifest(State(state): State<Arc<AppState>>) -> Response {
    json_bytes(StatusCode::OK, state.manifest_json.clone())
}

async fn api_not_found() -> Response {
    error_response(ApiError {
        status: StatusCode::NOT_FOUND,
        message: "no such endpoint".into(),
        words: Vec::new(),
    })
}

/// `None` or `"*"` allows any origin.
pub fn cors_layer(origin: Option<&str>) -> Result<CorsLayer, ServeError> {
    let allow = match origin {
        None | Some("*") => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(HeaderValue::from_str(o).map_err(|_| ServeError::CorsOrigin(o.to_string()))?),
    };
    Ok(CorsLayer::new().allow_methods([Method::GET]).allow_origin(allow))
}

pub fn router(state: Arc<AppState>, cors: CorsLayer, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/series", get(series))
        .route("/suggest", get(suggest))
        .route("/manifest", get(manifest))
        .fallback(api_not_found)
        .with_state(state);
    let app = Router::new().nest("/api", api);
    let app = match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    };
    app.layer(cors)
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub store: PathBuf,
    pub bind: SocketAddr,
    pub cors_origin: Option<String>,
    pub static_dir: Option<PathBuf>,
}

/// Open the store and serve until ctrl-c; in-flight requests are drained.
pub async fn serve(opts: ServeOptions) -> Result<(), ServeError> {
    let store = Store::open(&opts.store)?;
    let state = Arc::new(AppState::new(store));
    let app = router(state, cors_layer(opts.cors_origin.as_deref())?, opts.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(opts.bind).await.map_err(|source| ServeError::Bind {
        addr: opts.bind,
        source,
    })?;
    tracing::info!(addr = %listener.local_addr()?, store = %opts.store.display(), "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    Ok(())
}

/// A server on a background thread; dropping it shuts the server down.
pub struct RunningServer {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<Result<(), ServeError>>>,
}

impl RunningServer {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn stop(mut self) -> Result<(), ServeError> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> Result<(), ServeError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().expect("server thread panicked"),
            None => Ok(()),
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}

/// Open the store, bind `opts.bind` and serve from a background thread.
pub fn start(opts: ServeOptions) -> Result<RunningServer, ServeError> {
    let store = Store::open(&opts.store)?;
    let app = router(
        Arc::new(AppState::new(store)),
        cors_layer(opts.cors_origin.as_deref())?,
        opts.static_dir.as_deref(),
    );
    let std_listener = std::net::TcpListener::bind(opts.bind).map_err(|source| ServeError::Bind {
        addr: opts.bind,
        source,
    })?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || -> Result<(), ServeError> {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener)?;
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await?;
            Ok(())
        })
    });
    Ok(RunningServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Blocking wrapper around [`serve`] with its own runtime.
pub fn serve_blocking(opts: ServeOptions) -> Result<(), ServeError> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(serve(opts))
}
