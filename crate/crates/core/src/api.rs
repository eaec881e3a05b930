//! JSON bodies shared by the service and its client.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::assembly::Slot;
use crate::config::RunConfig;
use crate::error::{Result, Stage};
use crate::pipeline::{Pipeline, RunOutput};
use crate::prep::ProjectConfig;
use crate::report::Report;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    /// Whether provider routes have a backend.
    pub providers: bool,
}

/// A pipeline run on the service host. Paths are the host's.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JobRequest {
    pub config: PathBuf,
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
    #[serde(default)]
    pub record: bool,
    /// One stage only; all four when absent.
    #[serde(default)]
    pub stage: Option<Stage>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl JobRequest {
    pub fn pipeline(&self) -> Result<Pipeline> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out_dir {
            cfg.project.out_dir = Some(out.clone());
        }
        let providers = cfg.providers(self.fixtures.as_deref(), self.record)?;
        Pipeline::new(cfg, providers)
    }

    /// Runs the job in the calling thread. Output is `None` for a single
    /// stage.
    pub fn execute(&self, report: &mut Report) -> Result<Option<RunOutput>> {
        let p = self.pipeline()?;
        match self.stage {
            Some(stage) => p.run_stage(stage, report).map(|_| None),
            None => p.run_all_into(report).map(Some),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Succeeded,
    Failed,
}

impl JobState {
    pub fn is_done(self) -> bool {
        matches!(self, JobState::Succeeded | JobState::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub id: String,
    pub state: JobState,
    #[serde(default)]
    pub error: Option<String>,
    /// Set when a full run succeeds.
    #[serde(default)]
    pub output: Option<RunOutput>,
    #[serde(default)]
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleaveRequest {
    pub n_sc: usize,
    pub n_qc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleaveResponse {
    pub slots: Vec<Slot>,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlanRequest {
    pub duration_s: f64,
    #[serde(default)]
    pub project: Option<ProjectConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlanResponse {
    pub samples: Vec<f64>,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCountRequest {
    pub target_trailer_s: f64,
    #[serde(default = "default_avg_clip")]
    pub avg_clip_s: f64,
}

fn default_avg_clip() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCountResponse {
    pub scene_count: usize,
    pub n_quotes: usize,
    pub n_phrases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
}
