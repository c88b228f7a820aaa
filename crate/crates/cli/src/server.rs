//! JSON-over-HTTP API for interactive calibration.
//!
//! | route              | body                                   |
//! |--------------------|----------------------------------------|
//! | `POST /api/detect`   | `{values \| signal_id, L, S, N?, delta?, nu?, method?, seed?}` |
//! | `POST /api/generate` | `{length, windows?, noise_amp?, profile?, seed?}` |
//! | `GET /api/signals`   | none                                   |
//! | `GET /healthz`       | none                                   |
//!
//! Bad input gets 400 with the offending field, numerical failures 422.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use padkit::signals::{generate_synthetic, GeneratorSpec, Profile, Window};
use padkit::{KernelMethod, TimeSeries};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult, ErrorKind};
use crate::params::{run_detect, DetectParams, DetectResponse, DEFAULT_DELTA, DEFAULT_METHOD};
use crate::store::{signal_id, SignalStore};

/// Upper bound on generated and posted series lengths.
pub const MAX_LENGTH: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct AppState {
    pub store: SignalStore,
}

pub fn router(store: SignalStore) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/signals", get(list_signals))
        .route("/api/detect", post(detect_handler))
        .route("/api/generate", post(generate_handler))
        .with_state(Arc::new(AppState { store }))
}

pub async fn serve(addr: SocketAddr, store: SignalStore) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{} (data dir {})", listener.local_addr()?, store.dir().display());
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    field: Option<&'a str>,
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::Validation => StatusCode::BAD_REQUEST,
            ErrorKind::Numerical => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody { error: &self.message, field: self.field.as_deref() };
        json_response(status, &body)
    }
}

fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    let bytes = serde_json::to_vec(value).expect("response is serializable");
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

/// First backtick-quoted name in a serde message such as "missing field `L`".
fn quoted_name(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

fn parse_body<T: DeserializeOwned>(bytes: &[u8]) -> AppResult<T> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.into_inner().to_string();
        let field = if path == "." { quoted_name(&msg).unwrap_or("body").to_string() } else { path };
        AppError { kind: ErrorKind::Validation, field: Some(field), message: format!("invalid request body: {msg}") }
    })?;
    de.end()
        .map_err(|e| AppError::validation("body", format!("invalid request body: {e}")))?;
    Ok(value)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> AppResult<T> + Send + 'static) -> AppResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(AppError::io(format!("worker failed: {e}"))))
}

async fn healthz() -> Response {
    json_response(StatusCode::OK, &serde_json::json!({ "status": "ok" }))
}

async fn list_signals(State(state): State<Arc<AppState>>) -> Response {
    let store = state.store.clone();
    match blocking(move || store.list()).await {
        Ok(ids) => json_response(StatusCode::OK, &serde_json::json!({ "signals": ids })),
        Err(e) => e.into_response(),
    }
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

fn default_method() -> KernelMethod {
    DEFAULT_METHOD
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectRequest {
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    signal_id: Option<String>,
    #[serde(rename = "L", alias = "lag")]
    lag: usize,
    #[serde(rename = "S", alias = "train_len")]
    train_len: usize,
    #[serde(rename = "N", alias = "scan_len", default)]
    scan_len: Option<usize>,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    nu: Option<f64>,
    #[serde(default = "default_method")]
    method: KernelMethod,
    #[serde(default)]
    seed: u64,
}

fn detect_request(store: &SignalStore, req: DetectRequest) -> AppResult<DetectResponse> {
    let series = match (req.values, req.signal_id) {
        (Some(_), Some(_)) => return Err(AppError::validation("values", "give either values or signal_id, not both")),
        (None, None) => return Err(AppError::validation("values", "one of values or signal_id is required")),
        (Some(v), None) => {
            if v.len() > MAX_LENGTH {
                return Err(AppError::validation("values", format!("at most {MAX_LENGTH} values")));
            }
            TimeSeries::new(v).map_err(|e| AppError::input("values", e))?
        }
        (None, Some(id)) => store.load(&id)?.series,
    };
    let params = DetectParams {
        lag: req.lag,
        train_len: req.train_len,
        scan_len: req.scan_len,
        delta: req.delta,
        nu: req.nu,
        method: req.method,
        seed: req.seed,
    };
    Ok(run_detect(&series, &params)?.into())
}

async fn detect_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: DetectRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    let store = state.store.clone();
    match blocking(move || detect_request(&store, req)).await {
        Ok(r) => json_response(StatusCode::OK, &r),
        Err(e) => e.into_response(),
    }
}

fn default_profile() -> Profile {
    Profile::Chirp
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateRequest {
    length: usize,
    #[serde(default)]
    windows: Vec<Window>,
    #[serde(default)]
    noise_amp: f64,
    #[serde(default = "default_profile")]
    profile: Profile,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Serialize)]
struct GenerateResponse {
    signal_id: String,
    values: Vec<f64>,
    labels: Vec<Window>,
}

fn generate_request(store: &SignalStore, req: GenerateRequest) -> AppResult<GenerateResponse> {
    if req.length > MAX_LENGTH {
        return Err(AppError::validation("length", format!("length must be at most {MAX_LENGTH}")));
    }
    let spec = GeneratorSpec::new(req.profile, req.length, req.windows, req.noise_amp, req.seed);
    let signal = generate_synthetic(&spec).map_err(|e| {
        let windows = matches!(e, padkit::PadError::InvalidWindow(_));
        let mut err = AppError::from(e);
        if windows {
            err.field = Some("windows".into());
        }
        err
    })?;
    let id = signal_id(&spec);
    store.save(&id, &signal)?;
    Ok(GenerateResponse { signal_id: id, values: signal.series.values().to_vec(), labels: signal.anomaly_windows })
}

async fn generate_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: GenerateRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(e) => return e.into_response(),
    };
    let store = state.store.clone();
    match blocking(move || generate_request(&store, req)).await {
        Ok(r) => json_response(StatusCode::OK, &r),
        Err(e) => e.into_response(),
    }
}
