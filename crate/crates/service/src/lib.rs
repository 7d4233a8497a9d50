//! Read-only HTTP facade over a trained model, its reference dataset and
//! the hybrid counterfactual search.
//!
//! Routes:
//! - `GET /schema`
//! - `GET /patients?limit=&offset=`
//! - `GET /patients/{id}`
//! - `POST /predict` with `{"instance": {...}}`
//! - `POST /counterfactuals` with query fields plus `row_id` or `instance`
//! - `GET /model/metrics`
//! - `GET /healthz`

mod error;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use recourse_core::cf::{generate, HybridOptions, DEFAULT_M_MAX};
use recourse_core::tabular::{instance_from_json, instance_to_json, resolve_features};
use recourse_core::{CfQuery, Dataset, EvalReport, FeatureSchema, GbmModel, HybridReport, Instance, Predictor};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use error::ApiError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Everything the handlers read. Never mutated after construction.
pub struct AppState {
    pub model: GbmModel,
    pub dataset: Dataset,
    pub metrics: Option<EvalReport>,
    pub options: HybridOptions,
    /// Default upper band edge when a request omits `p_max`.
    pub default_p_max: f64,
    pub timeout: Duration,
}

impl AppState {
    pub fn new(model: GbmModel, dataset: Dataset) -> recourse_core::Result<Self> {
        model.check_schema(dataset.schema())?;
        Ok(Self {
            model,
            dataset,
            metrics: None,
            options: HybridOptions::default(),
            default_p_max: 0.5,
            timeout: DEFAULT_TIMEOUT,
        })
    }

    fn schema(&self) -> &FeatureSchema {
        self.dataset.schema()
    }

    fn probabilities(&self, x: &Instance) -> Result<Vec<f64>, ApiError> {
        Ok(self.model.predict_proba(x)?)
    }
}

type Shared = State<Arc<AppState>>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

async fn healthz() -> Json<Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn schema(State(s): Shared) -> Json<FeatureSchema> {
    Json(s.schema().clone())
}

#[derive(Deserialize)]
struct Page {
    limit: Option<usize>,
    offset: Option<usize>,
}

#[derive(Serialize)]
struct PatientSummary {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    risk: f64,
}

#[derive(Serialize)]
struct PatientList {
    total: usize,
    patients: Vec<PatientSummary>,
}

async fn patients(State(s): Shared, Query(page): Query<Page>) -> Result<Json<PatientList>, ApiError> {
    let d = &s.dataset;
    let offset = page.offset.unwrap_or(0).min(d.n_rows());
    let end = offset.saturating_add(page.limit.unwrap_or(100)).min(d.n_rows());
    let risks = s.model.class_probabilities(&d.rows()[offset..end], 1)?;
    let patients = (offset..end)
        .zip(risks)
        .map(|(i, risk)| PatientSummary { id: d.row_id(i), label: d.labels().map(|l| l[i]), risk })
        .collect();
    Ok(Json(PatientList { total: d.n_rows(), patients }))
}

#[derive(Serialize)]
struct Patient {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    instance: serde_json::Map<String, Value>,
    probabilities: Vec<f64>,
}

async fn patient(State(s): Shared, Path(id): Path<String>) -> Result<Json<Patient>, ApiError> {
    let i = s
        .dataset
        .find_row(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown patient id '{id}'")))?;
    let x = s.dataset.row(i);
    Ok(Json(Patient {
        id,
        label: s.dataset.labels().map(|l| l[i]),
        instance: instance_to_json(s.schema(), x),
        probabilities: s.probabilities(x)?,
    }))
}

#[derive(Deserialize)]
struct PredictRequest {
    instance: Value,
}

#[derive(Serialize)]
struct PredictResponse {
    probabilities: Vec<f64>,
}

async fn predict(State(s): Shared, body: Bytes) -> Result<Json<PredictResponse>, ApiError> {
    let req: PredictRequest = parse_body(&body)?;
    let x = instance_from_json(s.schema(), &req.instance)?;
    Ok(Json(PredictResponse { probabilities: s.probabilities(&x)? }))
}

/// Body of `POST /counterfactuals`. Exactly one of `row_id` and `instance`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterfactualRequest {
    pub row_id: Option<String>,
    pub instance: Option<Value>,
    #[serde(default = "default_target")]
    pub target_class: usize,
    #[serde(default)]
    pub p_min: f64,
    pub p_max: Option<f64>,
    #[serde(default)]
    pub fixed: Vec<String>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_target() -> usize {
    1
}
fn default_k() -> usize {
    3
}
fn one() -> f64 {
    1.0
}
fn default_m_max() -> usize {
    DEFAULT_M_MAX
}

impl CounterfactualRequest {
    fn into_query(self, s: &AppState) -> Result<CfQuery, ApiError> {
        let x0 = match (&self.row_id, &self.instance) {
            (Some(id), None) => {
                let i = s
                    .dataset
                    .find_row(id)
                    .ok_or_else(|| ApiError::not_found(format!("unknown patient id '{id}'")))?;
                s.dataset.row(i).clone()
            }
            (None, Some(v)) => instance_from_json(s.schema(), v)?,
            _ => return Err(ApiError::bad_request("give exactly one of 'row_id' and 'instance'")),
        };
        let fixed = resolve_features(s.schema(), &self.fixed)?;
        let q = CfQuery::new(x0, self.target_class, self.p_min, self.p_max.unwrap_or(s.default_p_max))
            .with_fixed(fixed)
            .with_k(self.k)
            .with_weights(self.alpha, self.beta)
            .with_m_max(self.m_max)
            .with_seed(self.seed);
        q.validate(s.schema(), s.model.n_classes())?;
        Ok(q)
    }
}

async fn counterfactuals(State(s): Shared, body: Bytes) -> Result<Json<HybridReport>, ApiError> {
    let req: CounterfactualRequest = parse_body(&body)?;
    let query = req.into_query(&s)?;
    let state = Arc::clone(&s);
    let started = Instant::now();
    let task = tokio::task::spawn_blocking(move || generate(&query, &state.model, &state.dataset, &state.options));
    // a result that lands after the deadline still counts as late
    match tokio::time::timeout(s.timeout, task).await {
        Ok(Err(join)) => Err(ApiError::internal(format!("search task failed: {join}"))),
        Ok(Ok(report)) if started.elapsed() <= s.timeout => Ok(Json(report?)),
        _ => Err(ApiError::timeout(format!("search exceeded {:?}", s.timeout))),
    }
}

async fn metrics(State(s): Shared) -> Result<Json<EvalReport>, ApiError> {
    s.metrics
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("no evaluation report loaded"))
}

/// The API routes with permissive CORS.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/schema", get(schema))
        .route("/patients", get(patients))
        .route("/patients/{id}", get(patient))
        .route("/predict", post(predict))
        .route("/counterfactuals", post(counterfactuals))
        .route("/model/metrics", get(metrics))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Routes plus, when given, a static directory (the explorer build) served
/// for every other path.
pub fn app(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let r = router(state);
    match static_dir {
        Some(dir) => r.fallback_service(ServeDir::new(dir)),
        None => r,
    }
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state, static_dir)).await
}
