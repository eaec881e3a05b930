//! Client side of the provider wire contract.
//!
//! Every model or tool the pipeline consults (LLM, embeddings, ASR, VAD, TTS,
//! music, source separation, OCR) sits behind [`ProviderBackend`], which
//! exchanges a uniform JSON envelope. [`Providers`] is the typed facade the
//! stages use: it builds payloads, retries transient failures, and validates
//! every response against its type invariants before anything reaches the
//! pipeline.
//!
//! Backends: [`FixtureStore`] (replay by request digest), [`Recorder`]
//! (capture live responses into a fixture directory), [`HttpBackend`]
//! (local or remote endpoint, one route per kind) and [`ScriptedBackend`]
//! (deterministic stand-in for the synthetic test movie).

mod fixture;
mod http;
mod scripted;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsp::Waveform;
use crate::timeline::TimeSpan;

pub use fixture::{canonical_json, request_digest, FixtureRecord, FixtureStore, Recorder};
pub use http::{HttpBackend, HttpEndpoint};
pub use scripted::ScriptedBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Llm,
    Embedding,
    Asr,
    Vad,
    Tts,
    Music,
    Separation,
    Ocr,
}

impl ProviderKind {
    pub const ALL: [ProviderKind; 8] = [
        ProviderKind::Llm,
        ProviderKind::Embedding,
        ProviderKind::Asr,
        ProviderKind::Vad,
        ProviderKind::Tts,
        ProviderKind::Music,
        ProviderKind::Separation,
        ProviderKind::Ocr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Llm => "llm",
            ProviderKind::Embedding => "embedding",
            ProviderKind::Asr => "asr",
            ProviderKind::Vad => "vad",
            ProviderKind::Tts => "tts",
            ProviderKind::Music => "music",
            ProviderKind::Separation => "separation",
            ProviderKind::Ocr => "ocr",
        }
    }

    pub fn parse(s: &str) -> Option<ProviderKind> {
        ProviderKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Request envelope: `{"kind", "template_id"?, "payload"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub kind: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    pub payload: Value,
}

/// Response envelope: `{"ok", "payload", "error"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub ok: bool,
    #[serde(default)]
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ProviderResponse {
    pub fn success(payload: Value) -> Self {
        ProviderResponse {
            ok: true,
            payload,
            error: None,
        }
    }

    pub fn failure(error: impl Into<String>) -> Self {
        ProviderResponse {
            ok: false,
            payload: Value::Null,
            error: Some(error.into()),
        }
    }
}

/// Error strings with these prefixes carry a meaning on the wire.
pub const ERR_CONTENT_FILTER: &str = "content_filter";
pub const ERR_UNAVAILABLE: &str = "unavailable";

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("invalid provider input: {0}")]
    Input(String),
    #[error("{kind} transport failure: {message}")]
    Transport { kind: ProviderKind, message: String },
    #[error("{kind} provider refused `{template}` on content-filter grounds")]
    ContentFilter { kind: ProviderKind, template: String },
    #[error("{kind} provider error: {message}")]
    Remote { kind: ProviderKind, message: String },
    #[error("{kind} response rejected: {reason}")]
    InvalidResponse { kind: ProviderKind, reason: String },
    #[error("no recorded fixture for {kind} request {digest}")]
    FixtureMiss { kind: ProviderKind, digest: String },
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("{kind} failed after {attempts} attempts: {last}")]
    RetriesExhausted {
        kind: ProviderKind,
        attempts: u32,
        last: String,
    },
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Transport { .. })
    }

    /// Maps a failed envelope onto an error variant.
    pub fn from_envelope(kind: ProviderKind, req: &ProviderRequest, message: String) -> Self {
        if message.starts_with(ERR_CONTENT_FILTER) {
            ProviderError::ContentFilter {
                kind,
                template: req.template_id.clone().unwrap_or_default(),
            }
        } else if message.starts_with(ERR_UNAVAILABLE) {
            ProviderError::Transport { kind, message }
        } else {
            ProviderError::Remote { kind, message }
        }
    }
}

pub trait ProviderBackend: Send + Sync {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

impl<T: ProviderBackend + ?Sized> ProviderBackend for Arc<T> {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).call(req)
    }
}

/// The five prompt templates the pipeline issues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    PlotSegmentation,
    QuoteSelection,
    KeywordExtraction,
    VoiceoverPhrases,
    MusicDescription,
}

impl Template {
    pub fn id(self) -> &'static str {
        match self {
            Template::PlotSegmentation => "plot-segmentation",
            Template::QuoteSelection => "quote-selection",
            Template::KeywordExtraction => "keyword-extraction",
            Template::VoiceoverPhrases => "voiceover-phrases",
            Template::MusicDescription => "music-description",
        }
    }

    pub fn from_id(id: &str) -> Option<Template> {
        [
            Template::PlotSegmentation,
            Template::QuoteSelection,
            Template::KeywordExtraction,
            Template::VoiceoverPhrases,
            Template::MusicDescription,
        ]
        .into_iter()
        .find(|t| t.id() == id)
    }

    /// Creative templates decode at the configured temperature; the rest at 0.
    pub fn is_creative(self) -> bool {
        matches!(self, Template::VoiceoverPhrases | Template::MusicDescription)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingConfig {
    pub creative_temperature: f64,
    pub max_tokens: u32,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        DecodingConfig {
            creative_temperature: 0.8,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            backoff_base_ms: 250,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_base_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

/// How media files travel in request payloads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaMode {
    /// Absolute file path (provider shares the filesystem).
    #[default]
    Local,
    /// Base64 file contents.
    Inline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f32>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptWord {
    pub text: String,
    pub span: TimeSpan,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadSegment {
    pub span: TimeSpan,
    pub is_speech: bool,
}

#[derive(Deserialize)]
struct WireWord {
    text: String,
    start_s: f64,
    end_s: f64,
    #[serde(default = "one")]
    confidence: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct WireSegment {
    start_s: f64,
    end_s: f64,
    is_speech: bool,
}

/// Sha256 hex digest of a file's contents.
pub fn file_digest(path: &Path) -> Result<String, ProviderError> {
    let bytes = std::fs::read(path)
        .map_err(|e| ProviderError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// JSON reference to a media file, by path or inline.
pub fn media_ref(path: &Path, mode: MediaMode) -> Result<Value, ProviderError> {
    let bytes = std::fs::read(path)
        .map_err(|e| ProviderError::Input(format!("cannot read {}: {e}", path.display())))?;
    let sha = hex::encode(Sha256::digest(&bytes));
    Ok(match mode {
        MediaMode::Local => {
            let abs = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
            json!({"path": abs.display().to_string(), "sha256": sha})
        }
        MediaMode::Inline => json!({
            "base64": base64::engine::general_purpose::STANDARD.encode(&bytes),
            "sha256": sha,
        }),
    })
}

/// Resolves a media reference (path or inline) to bytes.
pub fn resolve_media(value: &Value) -> Result<Vec<u8>, String> {
    if let Some(b64) = value.get("base64").and_then(Value::as_str) {
        return base64::engine::general_purpose::STANDARD
            .decode(b64)
            .map_err(|e| format!("bad base64 media: {e}"));
    }
    if let Some(path) = value.get("path").and_then(Value::as_str) {
        return std::fs::read(path).map_err(|e| format!("cannot read {path}: {e}"));
    }
    Err("media reference needs `path` or `base64`".into())
}

/// Inline WAV reference for responses.
pub fn inline_audio(w: &Waveform) -> Result<Value, String> {
    let bytes = w.to_wav_bytes().map_err(|e| e.to_string())?;
    Ok(json!({
        "base64": base64::engine::general_purpose::STANDARD.encode(&bytes),
        "sha256": hex::encode(Sha256::digest(&bytes)),
    }))
}

/// Typed facade over per-kind backends.
#[derive(Clone)]
pub struct Providers {
    routes: BTreeMap<ProviderKind, Arc<dyn ProviderBackend>>,
    pub retry: RetryPolicy,
    pub decoding: DecodingConfig,
    pub media_mode: MediaMode,
    pub embedding_dim: usize,
    pub sample_rate: u32,
    pub seed: u64,
}

impl fmt::Debug for Providers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Providers")
            .field("kinds", &self.routes.keys().collect::<Vec<_>>())
            .field("retry", &self.retry)
            .field("embedding_dim", &self.embedding_dim)
            .finish()
    }
}

impl Providers {
    /// Routes every kind to `backend`.
    pub fn uniform(backend: Arc<dyn ProviderBackend>) -> Providers {
        Providers {
            routes: ProviderKind::ALL
                .into_iter()
                .map(|k| (k, backend.clone()))
                .collect(),
            retry: RetryPolicy::default(),
            decoding: DecodingConfig::default(),
            media_mode: MediaMode::Local,
            embedding_dim: 768,
            sample_rate: crate::dsp::DEFAULT_SAMPLE_RATE,
            seed: 0,
        }
    }

    pub fn route(&mut self, kind: ProviderKind, backend: Arc<dyn ProviderBackend>) {
        self.routes.insert(kind, backend);
    }

    /// Sends a raw envelope, retrying transient failures.
    pub fn call(&self, req: &ProviderRequest) -> Result<Value, ProviderError> {
        let backend = self
            .routes
            .get(&req.kind)
            .ok_or_else(|| ProviderError::Config(format!("no backend for {}", req.kind)))?;
        let mut attempt = 0u32;
        loop {
            let outcome = backend.call(req).and_then(|resp| {
                if resp.ok {
                    Ok(resp.payload)
                } else {
                    Err(ProviderError::from_envelope(
                        req.kind,
                        req,
                        resp.error.unwrap_or_else(|| "unspecified error".into()),
                    ))
                }
            });
            match outcome {
                Err(e) if e.is_retryable() => {
                    if attempt >= self.retry.max_retries {
                        return Err(ProviderError::RetriesExhausted {
                            kind: req.kind,
                            attempts: attempt + 1,
                            last: e.to_string(),
                        });
                    }
                    tracing::debug!(kind = %req.kind, attempt, "retrying: {e}");
                    std::thread::sleep(self.retry.backoff(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn invalid(kind: ProviderKind, reason: impl Into<String>) -> ProviderError {
        ProviderError::InvalidResponse {
            kind,
            reason: reason.into(),
        }
    }

    pub fn llm_complete(&self, prompt: &str, template: Template) -> Result<String, ProviderError> {
        if prompt.trim().is_empty() {
            return Err(ProviderError::Input("empty prompt".into()));
        }
        let temperature = if template.is_creative() {
            self.decoding.creative_temperature
        } else {
            0.0
        };
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Llm,
            template_id: Some(template.id().to_string()),
            payload: json!({
                "prompt": prompt,
                "temperature": temperature,
                "max_tokens": self.decoding.max_tokens,
                "seed": self.seed,
            }),
        })?;
        payload
            .get("text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| Self::invalid(ProviderKind::Llm, "missing `text`"))
    }

    fn embed(&self, modality: &str, inputs: Vec<Value>) -> Result<Vec<EmbeddingVector>, ProviderError> {
        if inputs.is_empty() {
            return Err(ProviderError::Input("nothing to embed".into()));
        }
        let n = inputs.len();
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Embedding,
            template_id: None,
            payload: json!({"modality": modality, "inputs": inputs}),
        })?;
        let vectors: Vec<Vec<f32>> = payload
            .get("vectors")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| Self::invalid(ProviderKind::Embedding, e.to_string()))?
            .ok_or_else(|| Self::invalid(ProviderKind::Embedding, "missing `vectors`"))?;
        if vectors.len() != n {
            return Err(Self::invalid(
                ProviderKind::Embedding,
                format!("expected {n} vectors, got {}", vectors.len()),
            ));
        }
        for v in &vectors {
            if v.len() != self.embedding_dim {
                return Err(ProviderError::Config(format!(
                    "embedding dim {} does not match configured {}",
                    v.len(),
                    self.embedding_dim
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Self::invalid(ProviderKind::Embedding, "non-finite entry"));
            }
        }
        Ok(vectors.into_iter().map(EmbeddingVector).collect())
    }

    pub fn embed_text(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        self.embed("text", texts.iter().map(|t| json!(t)).collect())
    }

    pub fn embed_image(&self, frames: &[PathBuf]) -> Result<Vec<EmbeddingVector>, ProviderError> {
        let refs = frames
            .iter()
            .map(|p| media_ref(p, self.media_mode))
            .collect::<Result<Vec<_>, _>>()?;
        self.embed("image", refs)
    }

    pub fn transcribe(&self, audio: &Path) -> Result<Vec<TranscriptWord>, ProviderError> {
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Asr,
            template_id: None,
            payload: json!({"audio": media_ref(audio, self.media_mode)?, "sample_rate": self.sample_rate}),
        })?;
        let words: Vec<WireWord> = payload
            .get("words")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| Self::invalid(ProviderKind::Asr, e.to_string()))?
            .ok_or_else(|| Self::invalid(ProviderKind::Asr, "missing `words`"))?;
        let words = words
            .into_iter()
            .map(|w| {
                let span = TimeSpan::new(w.start_s, w.end_s)
                    .map_err(|e| Self::invalid(ProviderKind::Asr, e.to_string()))?;
                if !(0.0..=1.0).contains(&w.confidence) {
                    return Err(Self::invalid(ProviderKind::Asr, "confidence outside [0,1]"));
                }
                Ok(TranscriptWord {
                    text: w.text,
                    span,
                    confidence: w.confidence,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        check_transcript(&words).map_err(|r| Self::invalid(ProviderKind::Asr, r))?;
        Ok(words)
    }

    pub fn detect_voice_activity(&self, audio: &Path) -> Result<Vec<VadSegment>, ProviderError> {
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Vad,
            template_id: None,
            payload: json!({"audio": media_ref(audio, self.media_mode)?}),
        })?;
        let segs: Vec<WireSegment> = payload
            .get("segments")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| Self::invalid(ProviderKind::Vad, e.to_string()))?
            .ok_or_else(|| Self::invalid(ProviderKind::Vad, "missing `segments`"))?;
        let segs = segs
            .into_iter()
            .map(|s| {
                Ok(VadSegment {
                    span: TimeSpan::new(s.start_s, s.end_s)
                        .map_err(|e| Self::invalid(ProviderKind::Vad, e.to_string()))?,
                    is_speech: s.is_speech,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if segs
            .windows(2)
            .any(|w| w[1].span.start() < w[0].span.end() - 1e-9)
        {
            return Err(Self::invalid(ProviderKind::Vad, "segments unsorted or overlapping"));
        }
        Ok(segs)
    }

    fn audio_from(&self, kind: ProviderKind, payload: &Value) -> Result<Waveform, ProviderError> {
        let audio = payload
            .get("audio")
            .ok_or_else(|| Self::invalid(kind, "missing `audio`"))?;
        let bytes = resolve_media(audio).map_err(|e| Self::invalid(kind, e))?;
        let w = Waveform::from_wav_bytes(&bytes).map_err(|e| Self::invalid(kind, e.to_string()))?;
        if w.samples.iter().any(|s| !s.is_finite()) {
            return Err(Self::invalid(kind, "non-finite samples"));
        }
        Ok(w)
    }

    pub fn synthesize_speech(&self, text: &str, voice_id: &str) -> Result<Waveform, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::Input("empty text for speech".into()));
        }
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Tts,
            template_id: None,
            payload: json!({"text": text, "voice_id": voice_id, "sample_rate": self.sample_rate}),
        })?;
        let w = self.audio_from(ProviderKind::Tts, &payload)?;
        if w.is_empty() {
            return Err(Self::invalid(ProviderKind::Tts, "empty speech"));
        }
        Ok(w.resampled(self.sample_rate))
    }

    /// Music of exactly `duration_s` at the project rate.
    pub fn generate_music(&self, description: &str, duration_s: f64) -> Result<Waveform, ProviderError> {
        if !(duration_s > 0.0) {
            return Err(ProviderError::Input("music duration must be positive".into()));
        }
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Music,
            template_id: None,
            payload: json!({"description": description, "duration_s": duration_s, "sample_rate": self.sample_rate}),
        })?;
        let w = self.audio_from(ProviderKind::Music, &payload)?.to_mono();
        let expected = duration_s * w.sample_rate as f64;
        if (w.frames() as f64 - expected).abs() > 1.0 {
            return Err(Self::invalid(
                ProviderKind::Music,
                format!("asked for {duration_s} s, got {:.4} s", w.duration_s()),
            ));
        }
        let frames = crate::dsp::seconds_to_samples(duration_s, self.sample_rate);
        Ok(w.resampled(self.sample_rate).with_frames(frames))
    }

    pub fn separate_vocals(&self, audio: &Path) -> Result<Waveform, ProviderError> {
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Separation,
            template_id: None,
            payload: json!({"audio": media_ref(audio, self.media_mode)?}),
        })?;
        Ok(self.audio_from(ProviderKind::Separation, &payload)?.resampled(self.sample_rate))
    }

    pub fn ocr_has_text(&self, frame: &Path) -> Result<bool, ProviderError> {
        let payload = self.call(&ProviderRequest {
            kind: ProviderKind::Ocr,
            template_id: None,
            payload: json!({"image": media_ref(frame, self.media_mode)?}),
        })?;
        payload
            .get("has_text")
            .and_then(Value::as_bool)
            .ok_or_else(|| Self::invalid(ProviderKind::Ocr, "missing `has_text`"))
    }
}

/// Transcript invariant: sorted by start, no overlapping words.
pub fn check_transcript(words: &[TranscriptWord]) -> Result<(), String> {
    for (i, pair) in words.windows(2).enumerate() {
        if pair[1].span.start() < pair[0].span.start() {
            return Err(format!("word {} starts before word {i}", i + 1));
        }
        if pair[1].span.start() < pair[0].span.end() - 1e-9 {
            return Err(format!("word {} overlaps word {i}", i + 1));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
