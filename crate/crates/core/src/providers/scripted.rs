//! Deterministic stand-in provider for the synthetic movie.
//!
//! Every answer is a pure function of the request envelope and the scripted
//! movie: LLM completions are built from the prompt text, embeddings are
//! color-concept vectors, ASR and VAD read the submitted audio, TTS and music
//! are tone generators, separation is the identity and OCR looks for white
//! caption pixels.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{inline_audio, resolve_media, ProviderBackend, ProviderError, ProviderKind, ProviderRequest, ProviderResponse, Template};
use crate::dsp::{rms_dbfs, seconds_to_samples, Waveform};
use crate::synth::{self, SyntheticMovie, PALETTE};
use crate::text;

const VAD_FRAME_S: f64 = 0.02;
const VAD_THRESHOLD_DBFS: f64 = -35.0;
const VAD_MIN_GAP_S: f64 = 0.25;
const ASR_WORD_FLOOR_DBFS: f64 = -40.0;
/// Deliberate ASR boundary error the VAD refinement has to repair.
const ASR_START_LAG_S: f64 = 0.08;
const ASR_END_LEAD_S: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    movie: SyntheticMovie,
    dim: usize,
    /// Forces every OCR answer.
    pub ocr_override: Option<bool>,
}

impl ScriptedBackend {
    pub fn new(movie: SyntheticMovie, dim: usize) -> Self {
        ScriptedBackend {
            movie,
            dim: dim.max(PALETTE.len()),
            ocr_override: None,
        }
    }

    fn answer(&self, req: &ProviderRequest) -> Result<Value, String> {
        let p = &req.payload;
        match req.kind {
            ProviderKind::Llm => {
                let prompt = p["prompt"].as_str().ok_or("missing prompt")?;
                let template = req
                    .template_id
                    .as_deref()
                    .and_then(Template::from_id)
                    .ok_or("unknown template")?;
                Ok(json!({"text": self.complete(template, prompt)}))
            }
            ProviderKind::Embedding => {
                let inputs = p["inputs"].as_array().ok_or("missing inputs")?;
                let vectors = match p["modality"].as_str() {
                    Some("text") => inputs
                        .iter()
                        .map(|t| t.as_str().map(|t| self.text_vector(t)).ok_or("text input must be a string".to_string()))
                        .collect::<Result<Vec<_>, _>>()?,
                    Some("image") => inputs
                        .iter()
                        .map(|r| self.image_vector(r))
                        .collect::<Result<Vec<_>, _>>()?,
                    _ => return Err("modality must be text or image".into()),
                };
                Ok(json!({"vectors": vectors}))
            }
            ProviderKind::Asr => Ok(json!({"words": self.transcribe(&audio_of(p)?)})),
            ProviderKind::Vad => Ok(json!({"segments": vad_segments(&audio_of(p)?)})),
            ProviderKind::Tts => {
                let text = p["text"].as_str().ok_or("missing text")?;
                let sr = p["sample_rate"].as_u64().unwrap_or(44_100) as u32;
                let voice = p["voice_id"].as_str().unwrap_or("");
                let base = 140.0 + (digest(voice)[0] as f64 / 255.0) * 100.0;
                let mut samples = vec![0.0; seconds_to_samples(synth::tone_speech_duration(text), sr)];
                synth::render_tone_speech(&mut samples, sr, text, 0.0, base);
                Ok(json!({"audio": inline_audio(&Waveform::mono(samples, sr))?}))
            }
            ProviderKind::Music => {
                let d = p["duration_s"].as_f64().ok_or("missing duration_s")?;
                let sr = p["sample_rate"].as_u64().unwrap_or(44_100) as u32;
                let samples = (0..seconds_to_samples(d, sr))
                    .map(|i| {
                        let t = i as f64 / sr as f64;
                        let chord: f64 = [220.0, 261.63, 329.63]
                            .iter()
                            .map(|hz| (2.0 * std::f64::consts::PI * hz * t).sin())
                            .sum();
                        (0.15 * chord) as f32
                    })
                    .collect();
                Ok(json!({"audio": inline_audio(&Waveform::mono(samples, sr))?}))
            }
            ProviderKind::Separation => {
                let bytes = resolve_media(&p["audio"])?;
                let w = Waveform::from_wav_bytes(&bytes).map_err(|e| e.to_string())?;
                Ok(json!({"audio": inline_audio(&w)?}))
            }
            ProviderKind::Ocr => {
                if let Some(forced) = self.ocr_override {
                    return Ok(json!({"has_text": forced}));
                }
                let bytes = resolve_media(&p["image"])?;
                let img = image::load_from_memory(&bytes).map_err(|e| e.to_string())?.to_rgb8();
                let white = img.pixels().filter(|px| px.0.iter().all(|&c| c >= 200)).count();
                let frac = white as f64 / (img.width() * img.height()).max(1) as f64;
                Ok(json!({"has_text": frac >= 0.02}))
            }
        }
    }

    fn complete(&self, template: Template, prompt: &str) -> String {
        let n = exactly(prompt).unwrap_or(1);
        match template {
            Template::PlotSegmentation => {
                let synopsis = section(prompt, "Synopsis:\n");
                let sentences = sentences(&synopsis);
                (0..n)
                    .map(|i| format!("{}. {}", i + 1, sentences[i % sentences.len().max(1)]))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            Template::QuoteSelection => {
                let candidates = text::parse_list(&section(prompt, "Candidates:\n"));
                let spoken: Vec<&String> = candidates
                    .iter()
                    .filter(|c| self.movie.lines.iter().any(|l| &&l.text == c))
                    .collect();
                let rest = candidates.iter().filter(|c| !spoken.contains(c));
                spoken
                    .iter()
                    .copied()
                    .chain(rest)
                    .take(n)
                    .cloned()
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            Template::KeywordExtraction => {
                let scene = section(prompt, "Scene: ");
                let scene = scene.lines().next().unwrap_or("");
                let mut words = text::content_words(scene);
                if let Some(c) = synth::palette_index(scene) {
                    words.retain(|w| w != PALETTE[c].name);
                    words.insert(0, PALETTE[c].name.to_string());
                }
                for pad in ["cinematic", "journey", "moment", "vista", "mood"] {
                    if !words.iter().any(|w| w == pad) {
                        words.push(pad.to_string());
                    }
                }
                words.truncate(5);
                words.join(", ")
            }
            Template::VoiceoverPhrases => {
                let director = field(prompt, "Director: ");
                let month = field(prompt, "Release month: ");
                const POOL: [&str; 6] = [
                    "Every color hides a story.",
                    "Some journeys begin in silence.",
                    "One signal can change everything.",
                    "The horizon is only the beginning.",
                    "Nothing stays hidden forever.",
                    "Hold on to the light.",
                ];
                (0..n)
                    .map(|i| match (i, n) {
                        (0, 1) => format!("From {director}, this {month}."),
                        (0, _) => format!("From director {director}, a journey through color."),
                        (i, n) if i == n - 1 => format!("This {month}, the drift begins."),
                        (i, _) => POOL[(i - 1) % POOL.len()].to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            Template::MusicDescription => [
                "Instruments: Analog synth pads, felt piano, low strings.",
                "Key: A minor.",
                "Tempo: Slow, around 70 BPM.",
                "Dynamics: Soft opening with a steady swell.",
                "Texture: Sparse, widening as layers join.",
                "Mood: Wistful and expectant.",
                "Atmosphere: Vast, luminous.",
            ]
            .join("\n"),
        }
    }

    fn text_vector(&self, text: &str) -> Vec<f32> {
        let mut v = noise(text.as_bytes(), self.dim);
        match synth::palette_index(text) {
            Some(c) => {
                v.iter_mut().for_each(|x| *x *= 0.05);
                v[c] += 1.0;
            }
            None => {
                let n = v.iter().map(|x| x * x).sum::<f32>().sqrt().max(1e-6);
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
        v
    }

    fn image_vector(&self, media: &Value) -> Result<Vec<f32>, String> {
        let bytes = resolve_media(media)?;
        let img = image::load_from_memory(&bytes).map_err(|e| e.to_string())?.to_rgb8();
        let n = (img.width() * img.height()).max(1) as f64;
        let mut mean = [0.0f64; 3];
        for px in img.pixels() {
            for (m, &c) in mean.iter_mut().zip(&px.0) {
                *m += c as f64 / n;
            }
        }
        let mut v = noise(&bytes, self.dim);
        v.iter_mut().for_each(|x| *x *= 0.05);
        v[synth::nearest_palette(mean)] += 1.0;
        Ok(v)
    }

    fn transcribe(&self, audio: &Waveform) -> Vec<Value> {
        let mut words = Vec::new();
        for line in &self.movie.lines {
            for (w, span) in line.word_spans() {
                let seg = audio.slice_seconds(span.start(), span.end());
                if seg.is_empty() || rms_dbfs(&seg) <= ASR_WORD_FLOOR_DBFS {
                    continue;
                }
                words.push(json!({
                    "text": w,
                    "start_s": span.start() + ASR_START_LAG_S,
                    "end_s": span.end() - ASR_END_LEAD_S,
                    "confidence": 0.9,
                }));
            }
        }
        words
    }
}

impl ProviderBackend for ScriptedBackend {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        Ok(match self.answer(req) {
            Ok(payload) => ProviderResponse::success(payload),
            Err(e) => ProviderResponse::failure(e),
        })
    }
}

fn audio_of(p: &Value) -> Result<Waveform, String> {
    let bytes = resolve_media(&p["audio"])?;
    Ok(Waveform::from_wav_bytes(&bytes).map_err(|e| e.to_string())?.to_mono())
}

/// Energy VAD: 20 ms frames above -35 dBFS are speech; speech runs closer
/// than 0.25 s merge. Output alternates and covers the whole signal.
fn vad_segments(audio: &Waveform) -> Vec<Value> {
    let sr = audio.sample_rate;
    let hop = seconds_to_samples(VAD_FRAME_S, sr).max(1);
    let n = audio.samples.len();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        let end = (i + hop).min(n);
        let frame = Waveform::mono(audio.samples[i..end].to_vec(), sr);
        if rms_dbfs(&frame) > VAD_THRESHOLD_DBFS {
            match runs.last_mut() {
                Some(last) if last.1 == i => last.1 = end,
                _ => runs.push((i, end)),
            }
        }
        i = end;
    }
    let min_gap = seconds_to_samples(VAD_MIN_GAP_S, sr);
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for r in runs {
        match merged.last_mut() {
            Some(last) if r.0 - last.1 < min_gap => last.1 = r.1,
            _ => merged.push(r),
        }
    }
    let t = |s: usize| s as f64 / sr as f64;
    let mut out = Vec::new();
    let mut cursor = 0usize;
    for (a, b) in merged {
        if a > cursor {
            out.push(json!({"start_s": t(cursor), "end_s": t(a), "is_speech": false}));
        }
        out.push(json!({"start_s": t(a), "end_s": t(b), "is_speech": true}));
        cursor = b;
    }
    if n > cursor {
        out.push(json!({"start_s": t(cursor), "end_s": t(n), "is_speech": false}));
    }
    out
}

fn digest(bytes: impl AsRef<[u8]>) -> [u8; 32] {
    Sha256::digest(bytes.as_ref()).into()
}

/// Deterministic pseudo-random vector in [-1, 1]^dim seeded by `seed`.
fn noise(seed: &[u8], dim: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(dim);
    let mut block = 0u32;
    while out.len() < dim {
        let mut h = Sha256::new();
        h.update(seed);
        h.update(block.to_le_bytes());
        let bytes: [u8; 32] = h.finalize().into();
        out.extend(bytes.iter().map(|&b| b as f32 / 127.5 - 1.0));
        block += 1;
    }
    out.truncate(dim);
    out
}

fn exactly(prompt: &str) -> Option<usize> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"exactly (\d+)").unwrap());
    re.captures(prompt).and_then(|c| c[1].parse().ok())
}

/// Text after `marker` up to the first blank line that follows it.
fn section(prompt: &str, marker: &str) -> String {
    let Some(at) = prompt.find(marker) else {
        return String::new();
    };
    let rest = &prompt[at + marker.len()..];
    rest.split("\n\n").next().unwrap_or("").to_string()
}

fn field(prompt: &str, marker: &str) -> String {
    section(prompt, marker).lines().next().unwrap_or("").trim().to_string()
}

fn sentences(text: &str) -> Vec<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"[^.!?]+[.!?]+").unwrap());
    let found: Vec<String> = re
        .find_iter(text)
        .map(|m| m.as_str().trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if found.is_empty() {
        vec![text.trim().to_string()]
    } else {
        found
    }
}
