//! Read-only HTTP service exposing the explanation engine.
//!
//! The model and clusterings are loaded once at startup and never
//! mutated; every handler is a pure function of the request and the
//! shared state, so identical requests yield identical responses.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::io;
use crate::model::{validate_against, Clustering, PatientRecord, RuleSet};
use crate::relevance::{explain_global, explain_local, Normalize};
use crate::report::{batch_profiles, batch_to_json};

/// Startup configuration for the service.
#[derive(Debug, Clone, Deserialize)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub rules_path: String,
    pub factors_path: String,
    /// Name of the clustering used when a request names none.
    pub default_clustering: Option<String>,
    #[serde(default = "default_normalize")]
    pub normalize: String,
}

fn default_bind() -> String {
    "127.0.0.1:8080".to_string()
}

fn default_normalize() -> String {
    "literal".to_string()
}

impl ServiceConfig {
    /// Applies `RULEFACTOR_*` environment overrides: BIND, RULES,
    /// FACTORS, CLUSTERING, NORMALIZE.
    pub fn apply_env_overrides(&mut self) {
        if let Ok(v) = std::env::var("RULEFACTOR_BIND") {
            self.bind = v;
        }
        if let Ok(v) = std::env::var("RULEFACTOR_RULES") {
            self.rules_path = v;
        }
        if let Ok(v) = std::env::var("RULEFACTOR_FACTORS") {
            self.factors_path = v;
        }
        if let Ok(v) = std::env::var("RULEFACTOR_CLUSTERING") {
            self.default_clustering = Some(v);
        }
        if let Ok(v) = std::env::var("RULEFACTOR_NORMALIZE") {
            self.normalize = v;
        }
    }
}

/// Immutable shared state: the loaded model and its clusterings.
pub struct AppState {
    pub ruleset: RuleSet,
    pub clusterings: BTreeMap<String, Clustering>,
    pub default_clustering: String,
    pub default_normalize: Normalize,
}

impl AppState {
    /// Loads and strictly validates the model files named by the config.
    pub fn from_config(config: &ServiceConfig) -> anyhow::Result<AppState> {
        let rules_text = std::fs::read_to_string(&config.rules_path)?;
        let ruleset = io::parse_rules(&rules_text)
            .map_err(|e| anyhow::anyhow!("{}", e.with_file(&config.rules_path)))?;
        let factors_text = std::fs::read_to_string(&config.factors_path)?;
        let parsed = io::parse_clusterings(&factors_text)
            .map_err(|e| anyhow::anyhow!("{}", e.with_file(&config.factors_path)))?;
        let mut clusterings = BTreeMap::new();
        for c in parsed {
            // strict at the service boundary
            let (validated, _) = validate_against(&ruleset, &c, true)?;
            clusterings.insert(validated.name().to_string(), validated);
        }
        let technical = Clustering::identity(&ruleset);
        clusterings.entry(technical.name().to_string()).or_insert(technical);
        let default_clustering = match &config.default_clustering {
            Some(name) => {
                if !clusterings.contains_key(name) {
                    anyhow::bail!("default clustering '{name}' not found");
                }
                name.clone()
            }
            None => clusterings.keys().next().unwrap().clone(),
        };
        let default_normalize = Normalize::parse(&config.normalize)
            .ok_or_else(|| anyhow::anyhow!("unknown normalize mode '{}'", config.normalize))?;
        Ok(AppState { ruleset, clusterings, default_clustering, default_normalize })
    }
}

/// Uniform error payload: `{"error": <code>, "detail": <string>}`.
struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> ApiError {
        ApiError { status, code, detail: detail.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": self.code, "detail": self.detail});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = std::result::Result<Json<Value>, ApiError>;

#[derive(Debug, Deserialize)]
struct ExplainParams {
    clustering: Option<String>,
    normalize: Option<String>,
}

fn resolve<'a>(
    state: &'a AppState,
    params: &ExplainParams,
) -> std::result::Result<(&'a Clustering, Normalize), ApiError> {
    let name = params.clustering.as_deref().unwrap_or(&state.default_clustering);
    let clustering = state.clusterings.get(name).ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_clustering",
            format!("unknown clustering '{name}'"),
        )
    })?;
    let normalize = match &params.normalize {
        None => state.default_normalize,
        Some(m) => Normalize::parse(m).ok_or_else(|| {
            ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_normalize",
                format!("unknown normalize mode '{m}'"),
            )
        })?,
    };
    Ok((clustering, normalize))
}

async fn model_summary(State(state): State<Arc<AppState>>) -> ApiResult {
    Ok(Json(json!({
        "rules": state.ruleset.len(),
        "attributes": state.ruleset.attribute_universe().len(),
        "classes": state.ruleset.class_labels().iter().collect::<Vec<_>>(),
        "clusterings": state.clusterings.keys().collect::<Vec<_>>(),
        "default_clustering": state.default_clustering,
        "default_normalize": state.default_normalize.as_str(),
    })))
}

async fn explain_global_handler(
    State(state): State<Arc<AppState>>,
    Query(params): Query<ExplainParams>,
) -> ApiResult {
    let (clustering, normalize) = resolve(&state, &params)?;
    let report = explain_global(&state.ruleset, clustering, normalize).map_err(|e| {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    })?;
    Ok(Json(report.to_json()))
}

fn parse_body_record(body: &Value) -> std::result::Result<PatientRecord, ApiError> {
    io::record_from_value(body, "anonymous")
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_record", e.to_string()))
}

async fn explain_local_handler(
    State(state): State<Arc<AppState>>,
    Query(params): Query<ExplainParams>,
    body: Option<Json<Value>>,
) -> ApiResult {
    let Json(body) = body.ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_record", "request body must be a JSON object")
    })?;
    let (clustering, normalize) = resolve(&state, &params)?;
    let record = parse_body_record(&body)?;
    match explain_local(&state.ruleset, clustering, &record, normalize) {
        Ok(report) => Ok(Json(report.to_json())),
        Err(Error::NoActivation { patient_id }) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "no_activation",
            format!("no rule activates for record '{patient_id}'"),
        )),
        Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string())),
    }
}

async fn explain_batch_handler(
    State(state): State<Arc<AppState>>,
    Query(params): Query<ExplainParams>,
    body: Option<Json<Value>>,
) -> ApiResult {
    let Json(body) = body.ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_batch", "request body must be a JSON array")
    })?;
    let (clustering, normalize) = resolve(&state, &params)?;
    let items = body.as_array().ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_batch", "request body must be a JSON array")
    })?;
    if items.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_batch", "record list is empty"));
    }
    let mut records = Vec::with_capacity(items.len());
    let mut seen = std::collections::BTreeSet::new();
    for (i, item) in items.iter().enumerate() {
        let record = io::record_from_value(item, &format!("record{}", i + 1))
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_record", e.to_string()))?;
        if !seen.insert(record.id.clone()) {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "duplicate_id",
                format!("duplicate record id '{}'", record.id),
            ));
        }
        records.push(record);
    }
    let (spec, outcomes) = batch_profiles(&state.ruleset, clustering, &records, normalize)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_batch", e.to_string()))?;
    Ok(Json(batch_to_json(&spec, &outcomes, normalize, clustering.name())))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "unknown route")
}

/// Builds the router over shared immutable state.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/model/summary", get(model_summary))
        .route("/explain/global", get(explain_global_handler))
        .route("/explain/local", post(explain_local_handler))
        .route("/explain/batch", post(explain_batch_handler))
        .fallback(not_found)
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let state = Arc::new(AppState::from_config(&config)?);
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
