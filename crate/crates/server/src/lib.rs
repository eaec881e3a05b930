//! HTTP service over the trailer engine.
//!
//! Routes:
//! - `GET  /health`
//! - `POST /v1/providers/{kind}`: provider wire envelope, answered by the
//!   configured backend
//! - `POST /v1/jobs`, `GET /v1/jobs/{id}`: pipeline runs on this host
//! - `POST /v1/survey`: ratings CSV in, summary out
//! - `POST /v1/ops/interleave`, `/v1/ops/frame-plan`, `/v1/ops/scene-count`

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use uuid::Uuid;

use trailer_core::api::{
    ApiError, FramePlanRequest, FramePlanResponse, Health, InterleaveRequest, InterleaveResponse, JobRequest,
    JobState, JobStatus, SceneCountRequest, SceneCountResponse,
};
use trailer_core::assembly::survey::{aggregate_survey, parse_ratings};
use trailer_core::assembly::{interleave, n_phrases_for};
use trailer_core::prep::{plan_frame_samples, scene_count_for};
use trailer_core::providers::{ProviderBackend, ProviderKind, ProviderRequest, ProviderResponse, ERR_UNAVAILABLE};
use trailer_core::quotes::n_quotes_for;
use trailer_core::Report;

#[derive(Clone, Default)]
pub struct AppState {
    backend: Option<Arc<dyn ProviderBackend>>,
    jobs: Arc<Mutex<HashMap<String, JobStatus>>>,
}

impl AppState {
    pub fn new(backend: Option<Arc<dyn ProviderBackend>>) -> AppState {
        AppState {
            backend,
            jobs: Arc::default(),
        }
    }

    fn set(&self, status: JobStatus) {
        self.jobs.lock().expect("job table lock").insert(status.id.clone(), status);
    }
}

struct Failure(StatusCode, String);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(ApiError { error: self.1 })).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> Failure {
    Failure(StatusCode::BAD_REQUEST, msg.into())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/providers/{kind}", post(provider))
        .route("/v1/jobs", post(submit_job))
        .route("/v1/jobs/{id}", get(job_status))
        .route("/v1/survey", post(survey))
        .route("/v1/ops/interleave", post(op_interleave))
        .route("/v1/ops/frame-plan", post(op_frame_plan))
        .route("/v1/ops/scene-count", post(op_scene_count))
        .with_state(state)
}

/// Binds `addr` and serves until the task is dropped. Returns the bound
/// address through `on_bound` first, so port 0 can be used.
pub async fn serve(addr: SocketAddr, state: AppState, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        providers: state.backend.is_some(),
    })
}

async fn provider(
    State(state): State<AppState>,
    Path(kind): Path<String>,
    Json(req): Json<ProviderRequest>,
) -> Result<Response, Failure> {
    let kind = ProviderKind::parse(&kind).ok_or_else(|| bad_request(format!("unknown provider kind `{kind}`")))?;
    if kind != req.kind {
        return Err(bad_request(format!("path kind `{}` but body kind `{}`", kind.as_str(), req.kind.as_str())));
    }
    let Some(backend) = state.backend.clone() else {
        let resp = ProviderResponse::failure(format!("{ERR_UNAVAILABLE}: no provider backend configured"));
        return Ok((StatusCode::SERVICE_UNAVAILABLE, Json(resp)).into_response());
    };
    let resp = tokio::task::spawn_blocking(move || backend.call(&req))
        .await
        .map_err(|e| Failure(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .unwrap_or_else(|e| ProviderResponse::failure(e.to_string()));
    Ok(Json(resp).into_response())
}

async fn submit_job(State(state): State<AppState>, Json(req): Json<JobRequest>) -> (StatusCode, Json<JobStatus>) {
    let id = Uuid::new_v4().to_string();
    let queued = JobStatus {
        id: id.clone(),
        state: JobState::Queued,
        error: None,
        output: None,
        report: Report::new(),
    };
    state.set(queued.clone());
    let worker = state.clone();
    tokio::task::spawn_blocking(move || {
        worker.set(JobStatus {
            state: JobState::Running,
            ..queued.clone()
        });
        let mut report = Report::new();
        let result = req.execute(&mut report);
        worker.set(match result {
            Ok(output) => JobStatus {
                state: JobState::Succeeded,
                output,
                report,
                ..queued
            },
            Err(e) => {
                tracing::error!(job = %queued.id, "{e}");
                JobStatus {
                    state: JobState::Failed,
                    error: Some(e.to_string()),
                    report,
                    ..queued
                }
            }
        });
    });
    let status = state.jobs.lock().expect("job table lock")[&id].clone();
    (StatusCode::ACCEPTED, Json(status))
}

async fn job_status(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<JobStatus>, Failure> {
    state
        .jobs
        .lock()
        .expect("job table lock")
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| Failure(StatusCode::NOT_FOUND, format!("no job `{id}`")))
}

async fn survey(body: String) -> Result<Response, Failure> {
    let (rows, rejected) = parse_ratings(&body).map_err(|e| bad_request(e.to_string()))?;
    let mut summary = aggregate_survey(&rows);
    summary.rejected = rejected;
    Ok(Json(summary).into_response())
}

async fn op_interleave(Json(req): Json<InterleaveRequest>) -> Json<InterleaveResponse> {
    let mut report = Report::new();
    let slots = interleave(req.n_sc, req.n_qc, &mut report);
    Json(InterleaveResponse { slots, report })
}

async fn op_frame_plan(Json(req): Json<FramePlanRequest>) -> Result<Json<FramePlanResponse>, Failure> {
    let project = req.project.unwrap_or_default();
    project.validate().map_err(|e| bad_request(e.to_string()))?;
    let mut report = Report::new();
    let samples = plan_frame_samples(req.duration_s, &project, &mut report);
    Ok(Json(FramePlanResponse { samples, report }))
}

async fn op_scene_count(Json(req): Json<SceneCountRequest>) -> Json<SceneCountResponse> {
    let scene_count = scene_count_for(req.target_trailer_s, req.avg_clip_s);
    Json(SceneCountResponse {
        scene_count,
        n_quotes: n_quotes_for(scene_count),
        n_phrases: n_phrases_for(req.target_trailer_s),
    })
}
