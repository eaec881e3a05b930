use std::sync::Arc;
use std::time::Duration;

use serde_json::json;

use trailer_client::{ClientError, TrailerClient};
use trailer_core::api::{FramePlanRequest, JobRequest, JobState};
use trailer_core::assembly::Slot;
use trailer_core::config::{ProviderMode, RunConfig};
use trailer_core::pipeline::{synth_project, Pipeline};
use trailer_core::providers::{ProviderKind, ProviderRequest, ScriptedBackend};
use trailer_core::synth::SyntheticMovie;
use trailer_core::Stage;
use trailer_server::AppState;

async fn start(with_backend: bool) -> TrailerClient {
    let backend = with_backend.then(|| {
        Arc::new(ScriptedBackend::new(SyntheticMovie::default(), 16)) as Arc<dyn trailer_core::providers::ProviderBackend>
    });
    let (tx, rx) = tokio::sync::oneshot::channel();
    tokio::spawn(trailer_server::serve("127.0.0.1:0".parse().unwrap(), AppState::new(backend), move |addr| {
        tx.send(addr).unwrap();
    }));
    let addr = rx.await.unwrap();
    TrailerClient::new(format!("http://{addr}"))
}

#[tokio::test]
async fn health_and_ops() {
    let c = start(false).await;
    let h = c.health().await.unwrap();
    assert_eq!(h.status, "ok");
    assert!(!h.providers);

    use Slot::*;
    assert_eq!(c.interleave(3, 2).await.unwrap().slots, [Sc, Qc, Sc, Qc, Sc]);
    let dropped = c.interleave(2, 3).await.unwrap();
    assert!(dropped.report.has("quotes-dropped"));

    let plan = c.frame_plan(&FramePlanRequest { duration_s: 900.0, project: None }).await.unwrap();
    assert_eq!(plan.samples.len(), 89);
    assert_eq!(plan.samples[0], 36.0);

    let sc = c.scene_count(90.0, 4.0).await.unwrap();
    assert_eq!((sc.scene_count, sc.n_quotes, sc.n_phrases), (23, 5, 6));
}

#[tokio::test]
async fn survey_route() {
    let c = start(false).await;
    let csv = "participant,movie,method,appropriateness,attractiveness,interest\n\
               p1,m,ours,3,3,2\np1,m,base,1,2,2\np2,m,ours,9,1,1\n";
    let s = c.survey(csv).await.unwrap();
    assert_eq!(s.by_method["ours"].mean.total, 8.0);
    assert_eq!(s.by_method["ours"].wins, 1);
    assert_eq!(s.rejected.len(), 1);
    let err = c.survey("nope\n").await.unwrap_err();
    assert!(matches!(err, ClientError::Status { status, .. } if status == 400));
}

#[tokio::test]
async fn provider_route() {
    let c = start(true).await;
    let req = ProviderRequest {
        kind: ProviderKind::Llm,
        template_id: Some(trailer_core::providers::Template::PlotSegmentation.id().into()),
        payload: json!({"prompt": "Return exactly 2 lines.\nSynopsis:\nOne thing. Another thing.\n"}),
    };
    let resp = c.provider(&req).await.unwrap();
    assert!(resp.ok, "{resp:?}");
    assert!(resp.payload["text"].as_str().unwrap().lines().count() >= 1);

    let bare = start(false).await;
    let resp = bare.provider(&req).await.unwrap();
    assert!(!resp.ok);
    assert!(resp.error.unwrap().starts_with("unavailable"));
}

#[tokio::test]
async fn pipeline_over_http_providers() {
    let c = start(true).await;
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = synth_project(tmp.path(), &SyntheticMovie::default()).unwrap();
    let mut cfg = RunConfig::load(&cfg_path).unwrap();
    cfg.providers.mode = ProviderMode::Http;
    cfg.providers.base_url = format!("{}/v1/providers", c.base_url());
    let out = tokio::task::spawn_blocking(move || {
        let providers = cfg.providers(None, false)?;
        Pipeline::new(cfg, providers)?.run_all()
    })
    .await
    .unwrap()
    .unwrap();
    assert!(out.trailer.exists());
    assert!(out.log.exists());
}

#[tokio::test]
async fn jobs_run_on_the_host() {
    let c = start(false).await;
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = synth_project(tmp.path(), &SyntheticMovie::default()).unwrap();

    let prep = JobRequest {
        config: cfg_path.clone(),
        stage: Some(Stage::Prep),
        ..Default::default()
    };
    let submitted = c.submit_job(&prep).await.unwrap();
    let done = c.wait_job(&submitted.id, Duration::from_millis(50), Duration::from_secs(120)).await.unwrap();
    assert_eq!(done.state, JobState::Succeeded, "{:?}", done.error);
    assert!(done.output.is_none());
    assert!(tmp.path().join("work/prep.json").exists());

    let full = JobRequest {
        config: cfg_path,
        seed: Some(3),
        ..Default::default()
    };
    let id = c.submit_job(&full).await.unwrap().id;
    let done = c.wait_job(&id, Duration::from_millis(50), Duration::from_secs(120)).await.unwrap();
    assert_eq!(done.state, JobState::Succeeded, "{:?}", done.error);
    assert!(done.output.unwrap().trailer.exists());

    let bad = JobRequest {
        config: tmp.path().join("missing.toml"),
        ..Default::default()
    };
    let id = c.submit_job(&bad).await.unwrap().id;
    let done = c.wait_job(&id, Duration::from_millis(20), Duration::from_secs(10)).await.unwrap();
    assert_eq!(done.state, JobState::Failed);
    assert!(done.error.unwrap().contains("missing.toml"));

    let err = c.job("nope").await.unwrap_err();
    assert!(matches!(err, ClientError::Status { status, .. } if status == 404));
}
