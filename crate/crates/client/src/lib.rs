//! Async client for the trailer service.

use std::time::Duration;

use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use trailer_core::api::{
    ApiError, FramePlanRequest, FramePlanResponse, Health, InterleaveRequest, InterleaveResponse, JobRequest,
    JobStatus, SceneCountRequest, SceneCountResponse,
};
use trailer_core::assembly::survey::SurveySummary;
use trailer_core::providers::{ProviderRequest, ProviderResponse};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),

    #[error("service answered {status}: {message}")]
    Status { status: StatusCode, message: String },

    #[error("job {id} did not finish within {waited:?}")]
    Timeout { id: String, waited: Duration },
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct TrailerClient {
    base: String,
    http: reqwest::Client,
}

impl TrailerClient {
    pub fn new(base_url: impl Into<String>) -> TrailerClient {
        TrailerClient {
            base: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await.unwrap_or_default();
        let message = serde_json::from_str::<ApiError>(&text).map(|e| e.error).unwrap_or(text);
        Err(ClientError::Status { status, message })
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        Self::decode(self.http.post(self.url(path)).json(body).send().await?).await
    }

    pub async fn health(&self) -> Result<Health> {
        Self::decode(self.http.get(self.url("/health")).send().await?).await
    }

    /// Sends a provider envelope. Backend failures come back as an envelope
    /// with `ok: false`, not as an error.
    pub async fn provider(&self, req: &ProviderRequest) -> Result<ProviderResponse> {
        let resp = self
            .http
            .post(self.url(&format!("/v1/providers/{}", req.kind.as_str())))
            .json(req)
            .send()
            .await?;
        if resp.status() == StatusCode::SERVICE_UNAVAILABLE {
            return Ok(resp.json().await?);
        }
        Self::decode(resp).await
    }

    pub async fn submit_job(&self, req: &JobRequest) -> Result<JobStatus> {
        self.post("/v1/jobs", req).await
    }

    pub async fn job(&self, id: &str) -> Result<JobStatus> {
        Self::decode(self.http.get(self.url(&format!("/v1/jobs/{id}"))).send().await?).await
    }

    /// Polls until the job succeeds or fails.
    pub async fn wait_job(&self, id: &str, poll: Duration, limit: Duration) -> Result<JobStatus> {
        let start = tokio::time::Instant::now();
        loop {
            let status = self.job(id).await?;
            if status.state.is_done() {
                return Ok(status);
            }
            if start.elapsed() >= limit {
                return Err(ClientError::Timeout {
                    id: id.to_string(),
                    waited: limit,
                });
            }
            tokio::time::sleep(poll).await;
        }
    }

    pub async fn survey(&self, csv: impl Into<String>) -> Result<SurveySummary> {
        let resp = self
            .http
            .post(self.url("/v1/survey"))
            .header(reqwest::header::CONTENT_TYPE, "text/csv")
            .body(csv.into())
            .send()
            .await?;
        Self::decode(resp).await
    }

    pub async fn interleave(&self, n_sc: usize, n_qc: usize) -> Result<InterleaveResponse> {
        self.post("/v1/ops/interleave", &InterleaveRequest { n_sc, n_qc }).await
    }

    pub async fn frame_plan(&self, req: &FramePlanRequest) -> Result<FramePlanResponse> {
        self.post("/v1/ops/frame-plan", req).await
    }

    pub async fn scene_count(&self, target_trailer_s: f64, avg_clip_s: f64) -> Result<SceneCountResponse> {
        self.post(
            "/v1/ops/scene-count",
            &SceneCountRequest {
                target_trailer_s,
                avg_clip_s,
            },
        )
        .await
    }
}
