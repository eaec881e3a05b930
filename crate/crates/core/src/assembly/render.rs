use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::dsp::{duck, fade, match_loudness, mix, rms_dbfs, seconds_to_samples, DuckParams, Waveform, LIMITER_CEILING_DBFS};
use crate::error::{Error, Result};
use crate::media::{EncodeSettings, MediaError, MediaToolkit};
use crate::report::Report;
use crate::timeline::{
    log_from_timeline, validate_timeline, Clip, ClipKind, LogEntry, LogKind, TimeSpan, TimestampLog, TrailerTimeline,
    TIME_EPS,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub sample_rate: u32,
    pub quote_fade_s: f64,
    pub fade_in_s: f64,
    pub fade_out_s: f64,
    pub duck: DuckParams,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            fps: 24.0,
            width: 640,
            height: 360,
            sample_rate: crate::dsp::DEFAULT_SAMPLE_RATE,
            quote_fade_s: 0.15,
            fade_in_s: 1.0,
            fade_out_s: 2.0,
            duck: DuckParams::default(),
        }
    }
}

pub struct RenderInputs<'a> {
    pub timeline: &'a TrailerTimeline,
    pub video: &'a Path,
    /// Reads the source video.
    pub source: &'a dyn MediaToolkit,
    /// Writes the trailer container.
    pub sink: &'a dyn MediaToolkit,
    /// Vocal stem of the whole source audio.
    pub vocals: &'a Waveform,
    /// Placed voice-over clips: trailer span, speech, phrase.
    pub voices: &'a [(TimeSpan, Waveform, String)],
    pub music: &'a Waveform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderOutput {
    pub video: PathBuf,
    pub log_path: PathBuf,
    pub log: TimestampLog,
    pub frames: usize,
    pub audio_frames: usize,
}

/// Quote stems gained to the mean RMS of the voice clips. No voices, no
/// change.
pub fn adjust_quote_volume(quotes: &[Waveform], voices: &[Waveform], report: &mut Report) -> Vec<Waveform> {
    let levels: Vec<f64> = voices.iter().map(rms_dbfs).filter(|v| v.is_finite()).collect();
    if levels.is_empty() {
        return quotes.to_vec();
    }
    let target = levels.iter().sum::<f64>() / levels.len() as f64;
    quotes
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let m = match_loudness(q, target, LIMITER_CEILING_DBFS);
            if m.silent {
                report.warn("silent-quote", format!("quote {i} has no audible vocals"));
            }
            m.waveform
        })
        .collect()
}

fn black(w: u32, h: u32) -> RgbImage {
    RgbImage::new(w, h)
}

/// Frames of one clip on the trailer grid.
fn clip_frames(clip: &Clip, inputs: &RenderInputs<'_>, p: &RenderParams) -> Result<Vec<RgbImage>, MediaError> {
    let span = clip.trailer_span.expect("validated timeline");
    let a = (span.start() * p.fps).round() as usize;
    let b = (span.end() * p.fps).round() as usize;
    let n = b.saturating_sub(a);
    let Some(src) = clip.source_span else {
        return Ok(vec![black(p.width, p.height); n]);
    };
    let mut frames = inputs.source.frames(inputs.video, src, p.fps, (p.width, p.height))?;
    frames.truncate(n);
    while frames.len() < n {
        frames.push(frames.last().cloned().unwrap_or_else(|| black(p.width, p.height)));
    }
    if !clip.blank.is_empty() {
        for (i, f) in frames.iter_mut().enumerate() {
            let offset = (a + i) as f64 / p.fps - span.start();
            if offset < clip.blank.head_s - TIME_EPS || offset >= clip.length_s - clip.blank.tail_s - TIME_EPS {
                *f = black(p.width, p.height);
            }
        }
    }
    Ok(frames)
}

/// Mixes the audio, streams the picture through the sink toolkit and writes
/// the timestamp log next to `out`.
pub fn render_final(inputs: &RenderInputs<'_>, p: &RenderParams, out: &Path, report: &mut Report) -> Result<RenderOutput> {
    let tl = inputs.timeline;
    validate_timeline(tl).map_err(|v| Error::InvalidInput(format!("timeline: {v}")))?;
    p.duck.validate()?;
    let sr = p.sample_rate;
    let n_audio = seconds_to_samples(tl.total_duration_s, sr);

    // foreground bus: quote vocals plus voice-over
    let quote_clips: Vec<&Clip> = tl.clips.iter().filter(|c| c.kind == ClipKind::Quote).collect();
    let stems: Vec<Waveform> = quote_clips
        .iter()
        .map(|c| {
            let src = c.source_span.expect("quote clips have a source");
            let w = inputs
                .vocals
                .slice_seconds(src.start(), src.end())
                .with_frames(seconds_to_samples(c.length_s, sr));
            fade(&w, p.quote_fade_s, p.quote_fade_s)
        })
        .collect();
    let voice_waves: Vec<Waveform> = inputs.voices.iter().map(|(_, w, _)| w.clone()).collect();
    let stems = adjust_quote_volume(&stems, &voice_waves, report);

    let base = Waveform::silence(n_audio, sr);
    let mut tracks: Vec<(&Waveform, f64)> = vec![(&base, 0.0)];
    for (c, w) in quote_clips.iter().zip(&stems) {
        tracks.push((w, c.trailer_span.expect("validated").start()));
    }
    for (span, w, _) in inputs.voices {
        tracks.push((w, span.start()));
    }
    let foreground = mix(&tracks)?.waveform.with_frames(n_audio);
    let music = inputs.music.to_mono().with_frames(n_audio);
    let ducked = duck(&music, &foreground, &p.duck)?;
    let mixed = mix(&[(&foreground, 0.0), (&ducked, 0.0)])?;
    if mixed.limited {
        report.warn("limiter", "final mix exceeded the limiter ceiling and was clipped");
    }
    let audio = fade(&mixed.waveform, p.fade_in_s, p.fade_out_s);

    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let settings = EncodeSettings {
        fps: p.fps,
        width: p.width,
        height: p.height,
        sample_rate: sr,
    };
    let mut count = 0usize;
    let mut frames = tl
        .clips
        .iter()
        .flat_map(|c| match clip_frames(c, inputs, p) {
            Ok(v) => v.into_iter().map(Ok).collect::<Vec<_>>(),
            Err(e) => vec![Err(e)],
        })
        .inspect(|_| count += 1);
    inputs.sink.encode(out, settings, &mut frames, &audio)?;
    drop(frames);

    let mut log = log_from_timeline(tl);
    log.extend(inputs.voices.iter().map(|(span, _, phrase)| LogEntry {
        kind: LogKind::Voice,
        start_s: span.start(),
        end_s: span.end(),
        label: phrase.clone(),
    }));
    let log_path = out.with_extension("timestamps.json");
    log.write(&log_path)?;
    Ok(RenderOutput {
        video: out.to_path_buf(),
        log_path,
        log,
        frames: count,
        audio_frames: audio.frames(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f32, n: usize) -> Waveform {
        Waveform::mono(vec![v; n], 1000)
    }

    #[test]
    fn quotes_follow_the_voice_level() {
        let voices = [constant(0.1, 1000), constant(0.1, 500)];
        let quotes = [constant(0.0316, 1000)];
        let out = adjust_quote_volume(&quotes, &voices, &mut Report::new());
        assert!((rms_dbfs(&out[0]) - rms_dbfs(&voices[0])).abs() < 0.1);
    }

    #[test]
    fn no_voice_means_no_change() {
        let quotes = [constant(0.2, 100)];
        assert_eq!(adjust_quote_volume(&quotes, &[], &mut Report::new()), quotes);
    }

    #[test]
    fn silent_quote_is_reported() {
        let mut r = Report::new();
        adjust_quote_volume(&[constant(0.0, 10)], &[constant(0.1, 10)], &mut r);
        assert!(r.has("silent-quote"));
    }
}
