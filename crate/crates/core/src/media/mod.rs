//! Media toolkit boundary: probing, frame and audio decode, and encoding of
//! the final trailer. The pipeline never decodes video itself; it asks a
//! [`MediaToolkit`].
//!
//! Two implementations ship: [`NativeToolkit`] for the simple `.trv`
//! container (raw RGB frames plus PCM audio, used by synthetic test movies)
//! and [`FfmpegToolkit`], which drives external `ffmpeg`/`ffprobe`
//! executables as subprocesses.

mod ffmpeg;
mod native;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::Waveform;
use crate::timeline::TimeSpan;

pub use ffmpeg::FfmpegToolkit;
pub use native::{NativeToolkit, TrvReader, TrvWriter, TRV_EXTENSION};

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("media i/o on {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("malformed media {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("`{program}` not found; set render.ffmpeg / render.ffprobe or use a .trv source")]
    ToolMissing { program: String },
    #[error("`{program}` exited with {status}: {stderr}")]
    Tool {
        program: String,
        status: String,
        stderr: String,
    },
    #[error("{0}")]
    Unsupported(String),
}

impl MediaError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        MediaError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    }

    pub(crate) fn format(path: &Path, reason: impl Into<String>) -> Self {
        MediaError::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediaInfo {
    pub duration_s: f64,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeSettings {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub sample_rate: u32,
}

pub type FrameStream<'a> = dyn Iterator<Item = Result<RgbImage, MediaError>> + 'a;

pub trait MediaToolkit: Send + Sync {
    fn probe(&self, video: &Path) -> Result<MediaInfo, MediaError>;

    /// One still image at `at_s`.
    fn frame_at(&self, video: &Path, at_s: f64) -> Result<RgbImage, MediaError>;

    /// Frames at `span.start + i / fps` for every such time inside `span`,
    /// scaled to `size`.
    fn frames(
        &self,
        video: &Path,
        span: TimeSpan,
        fps: f64,
        size: (u32, u32),
    ) -> Result<Vec<RgbImage>, MediaError>;

    /// Mono audio at `sample_rate`; the whole track when `span` is `None`.
    fn audio(
        &self,
        video: &Path,
        span: Option<TimeSpan>,
        sample_rate: u32,
    ) -> Result<Waveform, MediaError>;

    /// Writes a container from a frame stream and a mixed audio track.
    fn encode(
        &self,
        out: &Path,
        settings: EncodeSettings,
        frames: &mut FrameStream<'_>,
        audio: &Waveform,
    ) -> Result<(), MediaError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolkitChoice {
    /// Native for `.trv` paths, ffmpeg otherwise.
    #[default]
    Auto,
    Native,
    Ffmpeg,
}

/// Picks a toolkit for `video`.
pub fn toolkit_for(
    video: &Path,
    choice: ToolkitChoice,
    ffmpeg: &str,
    ffprobe: &str,
) -> Arc<dyn MediaToolkit> {
    let native = video
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case(TRV_EXTENSION));
    match choice {
        ToolkitChoice::Native => Arc::new(NativeToolkit),
        ToolkitChoice::Auto if native => Arc::new(NativeToolkit),
        _ => Arc::new(FfmpegToolkit::new(ffmpeg, ffprobe)),
    }
}

/// Number of frames `frames` yields for `span` at `fps`.
pub fn frame_count(span: TimeSpan, fps: f64) -> usize {
    let n = (span.duration() * fps - 1e-6).ceil();
    n.max(0.0) as usize
}

/// Mean of each HSV channel on a 0-255 scale (hue mapped from degrees).
pub fn hsv_means(img: &RgbImage) -> [f64; 3] {
    let mut acc = [0.0f64; 3];
    let mut n = 0usize;
    for px in img.pixels() {
        let [h, s, v] = rgb_to_hsv255(px.0);
        acc[0] += h;
        acc[1] += s;
        acc[2] += v;
        n += 1;
    }
    if n == 0 {
        return acc;
    }
    acc.map(|c| c / n as f64)
}

/// RGB to HSV with every channel on 0-255.
pub fn rgb_to_hsv255([r, g, b]: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue_deg = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    [hue_deg / 360.0 * 255.0, sat * 255.0, max * 255.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsv_of_primaries() {
        assert_eq!(rgb_to_hsv255([255, 0, 0]), [0.0, 255.0, 255.0]);
        let [h, s, v] = rgb_to_hsv255([0, 0, 255]);
        assert!((h - 170.0).abs() < 1e-9 && s == 255.0 && v == 255.0);
        assert_eq!(rgb_to_hsv255([0, 0, 0]), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn frame_count_covers_span() {
        let span = TimeSpan::new(1.0, 2.0).unwrap();
        assert_eq!(frame_count(span, 24.0), 24);
        let span = TimeSpan::new(0.0, 0.05).unwrap();
        assert_eq!(frame_count(span, 24.0), 2);
    }

    #[test]
    fn auto_choice_follows_extension() {
        let tk = toolkit_for(Path::new("a.trv"), ToolkitChoice::Auto, "ffmpeg", "ffprobe");
        let missing = tk.probe(Path::new("/nonexistent/a.trv")).unwrap_err();
        assert!(matches!(missing, MediaError::Io { .. }));
    }
}
