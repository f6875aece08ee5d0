//! HTTP inference service: `POST /api/predict`, `GET /api/health` and
//! `GET /api/models` over JSON.

mod error;
pub mod registry;
pub mod types;

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::body::{Body, Bytes};
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

pub use error::{ApiError, PredictError};
pub use registry::{load_registry, BootError, Registry, RegistryConfig};
pub use types::{ErrorBody, GenrePrediction, Health, ModelInfo, PredictRequest, PredictionResult, SuccessPrediction};

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_BODY_LIMIT: usize = 64 * 1024;
const TASKS: [&str; 3] = ["genre", "success", "year"];

/// Inference backend behind the HTTP layer.
pub trait Predictor: Send + Sync {
    fn checkpoint_id(&self) -> Option<String>;
    /// Loaded models; tasks absent here are reported as missing.
    fn models(&self) -> Vec<ModelInfo>;
    /// Full prediction with `latency_ms` left at zero.
    fn predict(&self, lyrics: &str) -> Result<PredictionResult, PredictError>;
}

enum Status {
    Loading,
    Ready(Arc<dyn Predictor>),
    Failed(String),
}

/// Shared handler state; the predictor is installed once loading finishes.
#[derive(Clone)]
pub struct AppState {
    status: Arc<RwLock<Status>>,
    work: Arc<Semaphore>,
}

impl Default for AppState {
    fn default() -> Self {
        Self::loading()
    }
}

impl AppState {
    pub fn loading() -> Self {
        Self {
            status: Arc::new(RwLock::new(Status::Loading)),
            work: Arc::new(Semaphore::new(1)),
        }
    }

    pub fn ready(predictor: Arc<dyn Predictor>) -> Self {
        let s = Self::loading();
        s.set_ready(predictor);
        s
    }

    pub fn set_ready(&self, predictor: Arc<dyn Predictor>) {
        *self.status.write().unwrap_or_else(|e| e.into_inner()) = Status::Ready(predictor);
    }

    pub fn set_failed(&self, message: String) {
        *self.status.write().unwrap_or_else(|e| e.into_inner()) = Status::Failed(message);
    }

    fn snapshot(&self) -> Result<Arc<dyn Predictor>, ApiError> {
        match &*self.status.read().unwrap_or_else(|e| e.into_inner()) {
            Status::Ready(p) => Ok(p.clone()),
            Status::Loading => Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "loading",
                "models are still loading",
            )),
            Status::Failed(m) => Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "model_unavailable", m.clone())),
        }
    }
}

fn missing_tasks(models: &[ModelInfo]) -> Vec<String> {
    TASKS
        .iter()
        .filter(|t| !models.iter().any(|m| m.task == **t))
        .map(|t| t.to_string())
        .collect()
}

async fn health(State(state): State<AppState>) -> Response {
    let predictor = match state.snapshot() {
        Ok(p) => p,
        Err(e) => {
            let status = if e.code == "loading" { "loading" } else { "failed" };
            let body = Health {
                status: status.into(),
                loaded_models: BTreeMap::new(),
                checkpoint_id: None,
                missing: TASKS.iter().map(|t| t.to_string()).collect(),
            };
            return (StatusCode::SERVICE_UNAVAILABLE, Json(body)).into_response();
        }
    };
    let models = predictor.models();
    let missing = missing_tasks(&models);
    let body = Health {
        status: if missing.is_empty() { "ok" } else { "unavailable" }.into(),
        loaded_models: models.into_iter().map(|m| (m.task, m.artifact_id)).collect(),
        checkpoint_id: predictor.checkpoint_id(),
        missing,
    };
    let code = if body.missing.is_empty() {
        StatusCode::OK
    } else {
        StatusCode::SERVICE_UNAVAILABLE
    };
    (code, Json(body)).into_response()
}

async fn models(State(state): State<AppState>) -> Result<Json<Vec<ModelInfo>>, ApiError> {
    Ok(Json(state.snapshot()?.models()))
}

async fn predict(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Json<PredictionResult>, ApiError> {
    let start = Instant::now();
    let body = body.map_err(|e| {
        if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", "request body exceeds the size limit")
        } else {
            ApiError::new(e.status(), "bad_request", e.body_text())
        }
    })?;
    let request: PredictRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))?;
    let predictor = state.snapshot()?;
    let missing = missing_tasks(&predictor.models());
    if !missing.is_empty() {
        let mut err = ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "model_unavailable",
            format!("models not loaded: {}", missing.join(", ")),
        );
        err.missing = missing;
        return Err(err);
    }
    let _permit = state
        .work
        .clone()
        .acquire_owned()
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "inference_failed", e.to_string()))?;
    let mut result = tokio::task::spawn_blocking(move || predictor.predict(&request.lyrics))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "inference_failed", e.to_string()))??;
    result.latency_ms = start.elapsed().as_secs_f64() * 1000.0;
    Ok(Json(result))
}

async fn access_log(request: Request<Body>, next: Next) -> Response {
    let start = Instant::now();
    let method = request.method().to_string();
    let path = request.uri().path().to_string();
    let response = next.run(request).await;
    let record = serde_json::json!({
        "method": method,
        "path": path,
        "status": response.status().as_u16(),
        "latency_ms": start.elapsed().as_secs_f64() * 1000.0,
    });
    log::info!(target: "access", "{record}");
    response
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// Routes with a request body limit of `body_limit` bytes.
pub fn router(state: AppState, body_limit: usize) -> Router {
    Router::new()
        .route("/api/predict", post(predict))
        .route("/api/health", get(health))
        .route("/api/models", get(models))
        .fallback(not_found)
        .layer(DefaultBodyLimit::max(body_limit))
        .layer(middleware::from_fn(access_log))
        .with_state(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    pub body_limit: usize,
    pub registry: RegistryConfig,
}

impl ServiceConfig {
    /// Defaults overridden by `PORT` and `MODEL_DIR`.
    pub fn from_env(default_model_dir: PathBuf) -> Result<Self, String> {
        let port = match std::env::var("PORT") {
            Ok(p) => p.parse().map_err(|_| format!("PORT={p:?} is not a port number"))?,
            Err(_) => DEFAULT_PORT,
        };
        let dir = std::env::var_os("MODEL_DIR").map(PathBuf::from).unwrap_or(default_model_dir);
        Ok(Self {
            port,
            body_limit: DEFAULT_BODY_LIMIT,
            registry: RegistryConfig::from_model_dir(&dir),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind: {0}")]
    Bind(std::io::Error),
    #[error("model registry: {0}")]
    Boot(#[from] BootError),
    #[error("server: {0}")]
    Server(std::io::Error),
}

/// Serves on `listener` while `registry` loads in the background; a boot
/// error stops the server and is returned.
pub async fn serve_with<F>(
    listener: TcpListener,
    body_limit: usize,
    registry: RegistryConfig,
    shutdown: F,
) -> Result<(), ServeError>
where
    F: Future<Output = ()> + Send + 'static,
{
    let state = AppState::loading();
    let (fail_tx, mut fail_rx) = tokio::sync::mpsc::channel::<BootError>(1);
    let loader_state = state.clone();
    tokio::task::spawn_blocking(move || match load_registry(&registry) {
        Ok(r) => {
            if !r.missing().is_empty() {
                log::warn!("models not loaded: {}", r.missing().join(", "));
            }
            loader_state.set_ready(Arc::new(r));
            log::info!("model registry ready");
        }
        Err(e) => {
            loader_state.set_failed(e.to_string());
            let _ = fail_tx.blocking_send(e);
        }
    });
    let app = router(state, body_limit);
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let boot_failure = tokio::spawn(async move {
        // A successful load drops the sender; only a real error stops the server.
        let e = fail_rx.recv().await;
        if e.is_some() {
            let _ = stop_tx.send(());
        } else {
            std::future::pending::<()>().await;
        }
        e
    });
    let server = axum::serve(listener, app).with_graceful_shutdown(async move {
        tokio::select! {
            _ = shutdown => {}
            _ = stop_rx => {}
        }
    });
    server.await.map_err(ServeError::Server)?;
    if boot_failure.is_finished() {
        if let Ok(Some(e)) = boot_failure.await {
            return Err(ServeError::Boot(e));
        }
    } else {
        boot_failure.abort();
    }
    Ok(())
}

/// Binds `0.0.0.0:port` and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let addr = SocketAddr::from(([0, 0, 0, 0], config.port));
    let listener = TcpListener::bind(addr).await.map_err(ServeError::Bind)?;
    log::info!("listening on {addr}");
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    serve_with(listener, config.body_limit, config.registry, ctrl_c).await
}
