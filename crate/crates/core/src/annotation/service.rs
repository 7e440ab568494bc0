//! JSON endpoints under `/api` for annotation clients.

use std::path::Path;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use super::{AnnotationError, AnnotationRecord, AnnotationStore, RelevanceSummary, Task};
use crate::Ratio;

pub struct ServiceState {
    pub store: AnnotationStore,
    pub run_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthBody {
    pub status: String,
    pub run_id: String,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct TasksQuery {
    pub annotator: String,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct AgreementQuery {
    pub a: String,
    pub b: String,
}

/// Body of `POST /api/labels`. A missing timestamp is filled in by the
/// server.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct LabelBody {
    pub entailment_id: String,
    pub annotator_id: String,
    pub relevant: bool,
    pub characterizing: bool,
    #[serde(default)]
    pub timestamp: Option<String>,
    #[serde(default)]
    pub correct: Option<bool>,
}

/// Counts plus two-decimal percentages; percentages are absent when the
/// denominator is zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsBody {
    #[serde(flatten)]
    pub summary: RelevanceSummary,
    pub pct_non_relevant: Option<String>,
    pub pct_only_relevant: Option<String>,
    pub pct_relevant_and_characterizing: Option<String>,
    pub pct_total_relevant: Option<String>,
    pub pct_characterizing_given_relevant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementBody {
    pub annotator_a: String,
    pub annotator_b: String,
    pub n: usize,
    pub kappa_relevant: Option<f64>,
    pub kappa_characterizing: Option<f64>,
    pub pct_characterizing: Option<String>,
}

const MAX_LIMIT: usize = 500;

fn pct(r: Option<Ratio>) -> Option<String> {
    r.map(|r| r.percent_fixed(2))
}

impl IntoResponse for AnnotationError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            AnnotationError::UnknownEntailment(_) => (StatusCode::NOT_FOUND, "unknown_entailment"),
            AnnotationError::InvariantViolation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invariant_violation"),
            AnnotationError::EmptyAnnotator => (StatusCode::UNPROCESSABLE_ENTITY, "empty_annotator"),
            AnnotationError::NoOverlap(..) => (StatusCode::NOT_FOUND, "no_overlap"),
            AnnotationError::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
            _ => (StatusCode::BAD_REQUEST, "bad_request"),
        };
        let body = ErrorBody {
            error: code.to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

async fn health(State(state): State<Arc<ServiceState>>) -> Json<HealthBody> {
    Json(HealthBody {
        status: "ok".into(),
        run_id: state.run_id.clone(),
    })
}

async fn tasks(State(state): State<Arc<ServiceState>>, Query(q): Query<TasksQuery>) -> Json<Vec<Task>> {
    let limit = q.limit.unwrap_or(20).min(MAX_LIMIT);
    Json(state.store.pending_tasks(&q.annotator, limit))
}

async fn labels(
    State(state): State<Arc<ServiceState>>,
    Json(body): Json<LabelBody>,
) -> Result<Json<AnnotationRecord>, AnnotationError> {
    let mut record = AnnotationRecord::new(&body.entailment_id, &body.annotator_id, body.relevant, body.characterizing);
    if let Some(ts) = body.timestamp {
        record.timestamp = ts;
    }
    record.correct = body.correct;
    let stored = tokio::task::spawn_blocking(move || state.store.submit(record))
        .await
        .expect("submit does not panic")?;
    Ok(Json(stored))
}

pub(crate) fn stats_body(summary: RelevanceSummary) -> StatsBody {
    StatsBody {
        pct_non_relevant: pct(summary.pct_non_relevant()),
        pct_only_relevant: pct(summary.pct_only_relevant()),
        pct_relevant_and_characterizing: pct(summary.pct_relevant_and_characterizing()),
        pct_total_relevant: pct(summary.pct_total_relevant()),
        pct_characterizing_given_relevant: pct(summary.pct_characterizing_given_relevant()),
        summary,
    }
}

async fn stats(State(state): State<Arc<ServiceState>>) -> Json<StatsBody> {
    Json(stats_body(state.store.relevance_summary()))
}

async fn agreement(
    State(state): State<Arc<ServiceState>>,
    Query(q): Query<AgreementQuery>,
) -> Result<Json<AgreementBody>, AnnotationError> {
    let r = state.store.agreement(&q.a, &q.b)?;
    Ok(Json(AgreementBody {
        annotator_a: r.annotator_a,
        annotator_b: r.annotator_b,
        n: r.n,
        kappa_relevant: r.kappa_relevant,
        kappa_characterizing: r.kappa_characterizing,
        pct_characterizing: pct(r.pct_characterizing),
    }))
}

/// The `/api` routes, plus static files from `ui_dir` for every other
/// path when given.
pub fn router(state: Arc<ServiceState>, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/tasks", get(tasks))
        .route("/api/labels", post(labels))
        .route("/api/stats", get(stats))
        .route("/api/agreement", get(agreement))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
