//! HTTP routes and their JSON bodies.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use guidance_core::analysis::ReportRequest;
use guidance_core::experiment::{Arm, Covariate, ExperimentAssignment, ExperimentEvent, Outcome};
use guidance_core::guidance::{GuidanceResult, RuleSetDocument, TriggerEvent};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::state::{check_community_id, AppState};

type Shared = State<Arc<AppState>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    /// Optional; when present it must match the path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community_id: Option<String>,
    pub user_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default = "on_edit")]
    pub event: TriggerEvent,
}

fn on_edit() -> TriggerEvent {
    TriggerEvent::OnEdit
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community_id: Option<String>,
    pub user_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    #[serde(flatten)]
    pub guidance: GuidanceResult,
    pub arm: Arm,
    pub ruleset_version: u64,
    pub session_started: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_id: Option<u64>,
    pub guidance: GuidanceResult,
    pub arm: Arm,
    pub ruleset_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PutRulesetResponse {
    pub community_id: String,
    pub version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportResponse {
    pub csv: String,
    pub table: String,
    pub n_control: usize,
    pub n_treatment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub appended: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub communities: usize,
    pub events: usize,
    pub guidance_armed: bool,
    pub demo_mode: bool,
}

#[derive(Debug, Default, Deserialize)]
struct ArmQuery {
    arm: Option<String>,
}

impl ArmQuery {
    fn parse(&self) -> Result<Option<Arm>, ServiceError> {
        self.arm.as_deref().map(|a| a.parse().map_err(ServiceError::BadRequest)).transpose()
    }
}

#[derive(Debug, Default, Deserialize)]
struct ReportQuery {
    outcome: Option<String>,
    covariate: Option<String>,
    format: Option<String>,
}

fn same_community(path: &str, body: Option<&str>) -> Result<(), ServiceError> {
    match body {
        Some(c) if c != path => {
            Err(ServiceError::BadRequest(format!("body names community `{c}` but the path names `{path}`")))
        }
        _ => Ok(()),
    }
}

async fn put_ruleset(
    State(state): Shared,
    Path(id): Path<String>,
    Json(doc): Json<RuleSetDocument>,
) -> Result<Json<PutRulesetResponse>, ServiceError> {
    let version = state.put_ruleset(&id, doc)?;
    Ok(Json(PutRulesetResponse { community_id: id, version }))
}

async fn get_ruleset(State(state): Shared, Path(id): Path<String>) -> Result<Json<RuleSetDocument>, ServiceError> {
    check_community_id(&id)?;
    Ok(Json(state.ruleset(&id)?.document().clone()))
}

async fn evaluate(
    State(state): Shared,
    Path(id): Path<String>,
    Query(q): Query<ArmQuery>,
    Json(req): Json<EvaluateRequest>,
) -> Result<Json<EvaluateResponse>, ServiceError> {
    same_community(&id, req.community_id.as_deref())?;
    let e = state.evaluate(&id, &req.user_id, &req.title, &req.body, req.event, q.parse()?)?;
    Ok(Json(EvaluateResponse {
        guidance: e.guidance,
        arm: e.arm,
        ruleset_version: e.ruleset_version,
        session_started: e.session_started,
    }))
}

async fn submit(
    State(state): Shared,
    Path(id): Path<String>,
    Query(q): Query<ArmQuery>,
    Json(req): Json<SubmitRequest>,
) -> Result<Json<SubmitResponse>, ServiceError> {
    same_community(&id, req.community_id.as_deref())?;
    let s = state.submit(&id, &req.user_id, &req.title, &req.body, q.parse()?)?;
    Ok(Json(SubmitResponse {
        accepted: s.accepted,
        post_id: s.post_id,
        guidance: s.guidance,
        arm: s.arm,
        ruleset_version: s.ruleset_version,
    }))
}

async fn assignment(State(state): Shared, Path(user): Path<String>) -> Json<ExperimentAssignment> {
    let config = state.config();
    Json(ExperimentAssignment::new(user, config.salt.clone(), config.p_treat))
}

async fn ingest(
    State(state): Shared,
    Json(events): Json<Vec<ExperimentEvent>>,
) -> Result<Json<IngestResponse>, ServiceError> {
    Ok(Json(IngestResponse { appended: state.ingest(events)? }))
}

async fn report(State(state): Shared, Query(q): Query<ReportQuery>) -> Result<Response, ServiceError> {
    let outcome = q
        .outcome
        .as_deref()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Outcome>().map_err(ServiceError::BadRequest))
        .transpose()?;
    let covariate = q
        .covariate
        .as_deref()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Covariate>().map_err(ServiceError::BadRequest))
        .transpose()?;
    let report = tokio::task::spawn_blocking(move || state.report(&ReportRequest { outcome, covariate }))
        .await
        .map_err(|e| ServiceError::State(e.to_string()))??;
    Ok(match q.format.as_deref() {
        None | Some("json") => Json(ReportResponse {
            csv: report.to_csv(),
            table: report.to_table(),
            n_control: report.n_control,
            n_treatment: report.n_treatment,
        })
        .into_response(),
        Some("csv") => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], report.to_csv()).into_response(),
        Some("table") => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], report.to_table()).into_response(),
        Some(other) => return Err(ServiceError::BadRequest(format!("unknown format `{other}` (json, csv or table)"))),
    })
}

async fn healthz(State(state): Shared) -> Result<Json<Health>, ServiceError> {
    Ok(Json(Health {
        status: "ok".into(),
        communities: state.community_count(),
        events: state.event_count()?,
        guidance_armed: state.config().guidance_armed,
        demo_mode: state.config().demo_mode,
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/communities/{id}/ruleset", put(put_ruleset).get(get_ruleset))
        .route("/communities/{id}/evaluate", post(evaluate))
        .route("/communities/{id}/submit", post(submit))
        .route("/assignment/{user_id}", get(assignment))
        .route("/events", post(ingest))
        .route("/report", get(report))
        .route("/healthz", get(healthz))
        .with_state(state)
}
