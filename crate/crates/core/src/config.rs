//! Run configuration, read from TOML. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{GenreVoiceMap, MusicParams, RenderParams};
use crate::dsp::DuckParams;
use crate::error::{Error, Result};
use crate::media::{toolkit_for, MediaToolkit, ToolkitChoice};
use crate::prep::ProjectConfig;
use crate::providers::{
    DecodingConfig, FixtureStore, HttpBackend, HttpEndpoint, MediaMode, ProviderBackend, Providers, Recorder,
    RetryPolicy, ScriptedBackend,
};
use crate::quotes::{Lexicon, QuoteParams};
use crate::synth::SyntheticMovie;
use crate::text::BannedWords;
use crate::visual::VisualParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectSection {
    #[serde(flatten)]
    pub project: ProjectConfig,
    /// Movie metadata JSON.
    pub metadata: PathBuf,
    /// Working directory for cached stage outputs.
    pub workdir: Option<PathBuf>,
    /// Where the trailer and its log go.
    pub out_dir: Option<PathBuf>,
    pub avg_clip_s: f64,
    pub workers: usize,
}

impl Default for ProjectSection {
    fn default() -> Self {
        ProjectSection {
            project: ProjectConfig::default(),
            metadata: PathBuf::from("metadata.json"),
            workdir: None,
            out_dir: None,
            avg_clip_s: 4.0,
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    /// Recorded fixtures only.
    #[default]
    Replay,
    Http,
    /// Deterministic stand-in for synthetic movies.
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSection {
    pub mode: ProviderMode,
    pub fixtures: Option<PathBuf>,
    pub base_url: String,
    pub timeout_s: f64,
    pub auth_env: Option<String>,
    #[serde(flatten)]
    pub retry: RetryPolicy,
    #[serde(flatten)]
    pub decoding: DecodingConfig,
    pub embedding_dim: usize,
    pub media_mode: MediaMode,
}

impl Default for ProviderSection {
    fn default() -> Self {
        ProviderSection {
            mode: ProviderMode::Replay,
            fixtures: None,
            base_url: "http://127.0.0.1:8700/v1/providers".into(),
            timeout_s: 120.0,
            auth_env: None,
            retry: RetryPolicy::default(),
            decoding: DecodingConfig::default(),
            embedding_dim: 768,
            media_mode: MediaMode::Local,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AudioSection {
    pub duck: DuckParams,
    pub quote_fade_s: f64,
    pub fade_in_s: f64,
    pub fade_out_s: f64,
    /// Clearance between a voice-over clip and any quote or other voice clip.
    pub voice_pad_s: f64,
    #[serde(flatten)]
    pub music: MusicParams,
    /// Overrides the phrase count; 0 disables the voice-over.
    pub phrase_count: Option<usize>,
    pub voice_map: Option<PathBuf>,
}

impl Default for AudioSection {
    fn default() -> Self {
        let r = RenderParams::default();
        AudioSection {
            duck: r.duck,
            quote_fade_s: r.quote_fade_s,
            fade_in_s: r.fade_in_s,
            fade_out_s: r.fade_out_s,
            voice_pad_s: 0.5,
            music: MusicParams::default(),
            phrase_count: None,
            voice_map: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSection {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub sample_rate: u32,
    pub toolkit: ToolkitChoice,
    pub ffmpeg: String,
    pub ffprobe: String,
    /// Trailer file extension; defaults to the source's.
    pub container: Option<String>,
}

impl Default for RenderSection {
    fn default() -> Self {
        let r = RenderParams::default();
        RenderSection {
            fps: r.fps,
            width: r.width,
            height: r.height,
            sample_rate: r.sample_rate,
            toolkit: ToolkitChoice::Auto,
            ffmpeg: "ffmpeg".into(),
            ffprobe: "ffprobe".into(),
            container: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub project: ProjectSection,
    pub providers: ProviderSection,
    pub quotes: QuoteParams,
    pub visual: VisualParams,
    pub audio: AudioSection,
    pub render: RenderSection,
    pub banned_words: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    /// Seed handed to providers that accept one.
    pub seed: u64,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if !p.as_os_str().is_empty() && p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.project.project.video_path);
        resolve(base, &mut self.project.metadata);
        resolve_opt(base, &mut self.project.workdir);
        resolve_opt(base, &mut self.project.out_dir);
        resolve_opt(base, &mut self.providers.fixtures);
        resolve_opt(base, &mut self.audio.voice_map);
        resolve_opt(base, &mut self.banned_words);
        resolve_opt(base, &mut self.lexicon);
    }

    pub fn validate(&self) -> Result<()> {
        self.project.project.validate()?;
        self.audio.duck.validate()?;
        if !(self.project.avg_clip_s > 0.0) {
            return Err(Error::Config("avg_clip_s must be positive".into()));
        }
        if !(self.render.fps > 0.0) || self.render.width == 0 || self.render.height == 0 {
            return Err(Error::Config("render fps and size must be positive".into()));
        }
        if self.providers.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be positive".into()));
        }
        Ok(())
    }

    /// Working directory: configured, or `<project_name>` beside the video.
    pub fn workdir(&self) -> PathBuf {
        self.project.workdir.clone().unwrap_or_else(|| {
            let video = &self.project.project.video_path;
            video
                .parent()
                .unwrap_or(Path::new("."))
                .join(&self.project.project.project_name)
        })
    }

    pub fn out_dir(&self) -> PathBuf {
        self.project.out_dir.clone().unwrap_or_else(|| self.workdir().join("out"))
    }

    pub fn trailer_path(&self) -> PathBuf {
        let ext = self.render.container.clone().unwrap_or_else(|| {
            self.project
                .project
                .video_path
                .extension()
                .map_or("mp4".into(), |e| e.to_string_lossy().to_lowercase())
        });
        self.out_dir().join(format!("{}.{ext}", self.project.project.project_name))
    }

    pub fn render_params(&self) -> RenderParams {
        RenderParams {
            fps: self.render.fps,
            width: self.render.width,
            height: self.render.height,
            sample_rate: self.render.sample_rate,
            quote_fade_s: self.audio.quote_fade_s,
            fade_in_s: self.audio.fade_in_s,
            fade_out_s: self.audio.fade_out_s,
            duck: self.audio.duck,
        }
    }

    pub fn toolkit(&self) -> Arc<dyn MediaToolkit> {
        toolkit_for(
            &self.project.project.video_path,
            self.render.toolkit,
            &self.render.ffmpeg,
            &self.render.ffprobe,
        )
    }

    pub fn banned_words(&self) -> Result<BannedWords> {
        match &self.banned_words {
            Some(p) => BannedWords::load(p).map_err(|e| Error::io(p, e)),
            None => Ok(BannedWords::default()),
        }
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        match &self.lexicon {
            Some(p) => Lexicon::load(p),
            None => Ok(Lexicon::default()),
        }
    }

    pub fn voice_map(&self) -> Result<GenreVoiceMap> {
        match &self.audio.voice_map {
            Some(p) => GenreVoiceMap::load(p),
            None => Ok(GenreVoiceMap::default()),
        }
    }

    fn live_backend(&self) -> Result<Arc<dyn ProviderBackend>> {
        let p = &self.providers;
        match p.mode {
            ProviderMode::Http => Ok(Arc::new(HttpBackend::new(HttpEndpoint {
                base_url: p.base_url.clone(),
                timeout_s: p.timeout_s,
                auth_env: p.auth_env.clone(),
            })?)),
            ProviderMode::Scripted => Ok(Arc::new(ScriptedBackend::new(SyntheticMovie::default(), p.embedding_dim))),
            ProviderMode::Replay => Err(Error::Config(
                "recording needs a live provider mode (http or scripted)".into(),
            )),
        }
    }

    /// Provider facade for this run. A fixture directory without `record`
    /// forces replay; with `record` the live backend's answers are stored
    /// there.
    pub fn providers(&self, fixtures: Option<&Path>, record: bool) -> Result<Providers> {
        let dir = fixtures.map(Path::to_path_buf).or_else(|| self.providers.fixtures.clone());
        let backend: Arc<dyn ProviderBackend> = match (record, dir) {
            (true, Some(dir)) => Arc::new(Recorder::new(self.live_backend()?, FixtureStore::new(dir))),
            (true, None) => return Err(Error::Config("--record needs a fixture directory".into())),
            (false, Some(dir)) if fixtures.is_some() || self.providers.mode == ProviderMode::Replay => {
                Arc::new(FixtureStore::new(dir))
            }
            (false, None) if self.providers.mode == ProviderMode::Replay => {
                return Err(Error::Config("replay mode needs a fixture directory".into()))
            }
            _ => self.live_backend()?,
        };
        let mut providers = Providers::uniform(backend);
        providers.retry = self.providers.retry;
        providers.decoding = self.providers.decoding;
        providers.media_mode = self.providers.media_mode;
        providers.embedding_dim = self.providers.embedding_dim;
        providers.sample_rate = self.render.sample_rate;
        providers.seed = self.seed;
        Ok(providers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.project.project.sample_interval_s, 9.0);
        assert_eq!(cfg.audio.voice_pad_s, 0.5);
        assert_eq!(cfg.visual.ocr_budget, 20);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = RunConfig::parse("[project]\nvideo_path = \"m.trv\"\ntarget_trailer_s = 48.0\n").unwrap();
        assert_eq!(cfg.project.project.target_trailer_s, 48.0);
        assert_eq!(cfg.project.project.head_skip_frac, 0.04);
    }

    #[test]
    fn paths_resolve_against_the_config_dir() {
        let mut cfg = RunConfig::parse("[project]\nvideo_path = \"m.trv\"\nmetadata = \"/abs/meta.json\"\n").unwrap();
        cfg.resolve_paths(Path::new("/work"));
        assert_eq!(cfg.project.project.video_path, PathBuf::from("/work/m.trv"));
        assert_eq!(cfg.project.metadata, PathBuf::from("/abs/meta.json"));
        assert_eq!(cfg.workdir(), PathBuf::from("/work/trailer"));
        assert_eq!(cfg.trailer_path(), PathBuf::from("/work/trailer/out/trailer.trv"));
    }

    #[test]
    fn replay_without_fixtures_is_a_config_error() {
        let cfg = RunConfig::default();
        assert!(matches!(cfg.providers(None, false), Err(Error::Config(_))));
        assert!(matches!(cfg.providers(None, true), Err(Error::Config(_))));
    }

    #[test]
    fn bad_values_fail_validation() {
        let mut cfg = RunConfig::default();
        cfg.project.project.head_skip_frac = 0.6;
        cfg.project.project.tail_skip_frac = 0.5;
        assert!(cfg.validate().is_err());
    }
}
