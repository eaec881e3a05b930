use serde::{Deserialize, Serialize};

use crate::dsp::{seconds_to_samples, Waveform};
use crate::error::{Error, Result};
use crate::metadata::MovieMetadata;
use crate::prompts::{self, MUSIC_FIELDS};
use crate::providers::{Providers, Template};
use crate::report::Report;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MusicParams {
    /// Longest piece the music provider produces in one call.
    pub max_segment_s: f64,
    pub crossfade_s: f64,
}

impl Default for MusicParams {
    fn default() -> Self {
        MusicParams {
            max_segment_s: 30.0,
            crossfade_s: 2.0,
        }
    }
}

/// Labels absent from a music description (a line `Label: ...`).
pub fn missing_music_fields(description: &str) -> Vec<&'static str> {
    MUSIC_FIELDS
        .iter()
        .copied()
        .filter(|field| {
            !description.lines().any(|l| {
                let l = l.trim_start_matches(|c: char| !c.is_alphabetic());
                l.len() > field.len()
                    && l[..field.len()].eq_ignore_ascii_case(field)
                    && l[field.len()..].trim_start().starts_with(':')
            })
        })
        .collect()
}

/// Music description with all seven labeled fields; one reprompt, then the
/// raw text with a warning.
pub fn generate_music_description(providers: &Providers, meta: &MovieMetadata, report: &mut Report) -> Result<String> {
    let prompt = prompts::music_description(meta);
    let first = providers.llm_complete(&prompt, Template::MusicDescription)?;
    let missing = missing_music_fields(&first);
    if missing.is_empty() {
        return Ok(first.trim().to_string());
    }
    let retry = prompts::music_description_retry(&prompt, &missing);
    let second = providers.llm_complete(&retry, Template::MusicDescription)?;
    let still = missing_music_fields(&second);
    if !still.is_empty() {
        report.warn("music-fields-missing", format!("description lacks {}", still.join(", ")));
    }
    Ok(second.trim().to_string())
}

/// Repeats `segment` with linear crossfades of `crossfade_s` until it covers
/// `frames`, then cuts to exactly `frames`.
pub fn loop_with_crossfade(segment: &Waveform, frames: usize, crossfade_s: f64) -> Result<Waveform> {
    let seg = segment.to_mono();
    let n = seg.frames();
    if n == 0 {
        return Err(Error::InvalidInput("cannot loop an empty segment".into()));
    }
    if n >= frames {
        return Ok(seg.with_frames(frames));
    }
    let x = seconds_to_samples(crossfade_s, seg.sample_rate).min(n / 2);
    let mut out: Vec<f32> = seg.samples.clone();
    while out.len() < frames {
        let base = out.len() - x;
        for i in 0..x {
            let w = (i + 1) as f32 / (x + 1) as f32;
            out[base + i] = out[base + i] * (1.0 - w) + seg.samples[i] * w;
        }
        out.extend_from_slice(&seg.samples[x..]);
    }
    Ok(Waveform::mono(out, seg.sample_rate).with_frames(frames))
}

/// Trailer-length music bed from a description.
pub fn build_music(providers: &Providers, description: &str, trailer_s: f64, params: &MusicParams) -> Result<Waveform> {
    if !(trailer_s > 0.0 && trailer_s.is_finite()) {
        return Err(Error::InvalidInput(format!("trailer duration {trailer_s} s")));
    }
    let frames = seconds_to_samples(trailer_s, providers.sample_rate);
    if trailer_s <= params.max_segment_s {
        return Ok(providers.generate_music(description, trailer_s)?.with_frames(frames));
    }
    let segment = providers.generate_music(description, params.max_segment_s)?;
    loop_with_crossfade(&segment, frames, params.crossfade_s)
}
