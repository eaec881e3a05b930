//! `ffmpeg`/`ffprobe` subprocess toolkit for ordinary video files.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};

use image::RgbImage;
use serde_json::Value;

use super::{EncodeSettings, FrameStream, MediaError, MediaInfo, MediaToolkit};
use crate::dsp::Waveform;
use crate::timeline::TimeSpan;

#[derive(Debug, Clone)]
pub struct FfmpegToolkit {
    ffmpeg: String,
    ffprobe: String,
}

fn secs(t: f64) -> String {
    format!("{t:.6}")
}

impl FfmpegToolkit {
    pub fn new(ffmpeg: impl Into<String>, ffprobe: impl Into<String>) -> Self {
        FfmpegToolkit {
            ffmpeg: ffmpeg.into(),
            ffprobe: ffprobe.into(),
        }
    }

    pub fn probe_args(video: &Path) -> Vec<String> {
        vec![
            "-v".into(),
            "error".into(),
            "-print_format".into(),
            "json".into(),
            "-show_streams".into(),
            "-show_format".into(),
            video.display().to_string(),
        ]
    }

    pub fn still_args(video: &Path, at_s: f64) -> Vec<String> {
        vec![
            "-v".into(),
            "error".into(),
            "-ss".into(),
            secs(at_s),
            "-i".into(),
            video.display().to_string(),
            "-frames:v".into(),
            "1".into(),
            "-f".into(),
            "image2pipe".into(),
            "-vcodec".into(),
            "png".into(),
            "-".into(),
        ]
    }

    pub fn frames_args(video: &Path, span: TimeSpan, fps: f64, (w, h): (u32, u32)) -> Vec<String> {
        vec![
            "-v".into(),
            "error".into(),
            "-ss".into(),
            secs(span.start()),
            "-t".into(),
            secs(span.duration()),
            "-i".into(),
            video.display().to_string(),
            "-vf".into(),
            format!("fps={fps},scale={w}:{h}"),
            "-f".into(),
            "rawvideo".into(),
            "-pix_fmt".into(),
            "rgb24".into(),
            "-".into(),
        ]
    }

    pub fn audio_args(video: &Path, span: Option<TimeSpan>, sample_rate: u32) -> Vec<String> {
        let mut args: Vec<String> = vec!["-v".into(), "error".into()];
        if let Some(span) = span {
            args.extend(["-ss".into(), secs(span.start()), "-t".into(), secs(span.duration())]);
        }
        args.extend([
            "-i".into(),
            video.display().to_string(),
            "-vn".into(),
            "-ac".into(),
            "1".into(),
            "-ar".into(),
            sample_rate.to_string(),
            "-f".into(),
            "f32le".into(),
            "-".into(),
        ]);
        args
    }

    pub fn encode_args(out: &Path, audio_wav: &Path, s: EncodeSettings) -> Vec<String> {
        vec![
            "-v".into(),
            "error".into(),
            "-y".into(),
            "-f".into(),
            "rawvideo".into(),
            "-pix_fmt".into(),
            "rgb24".into(),
            "-s".into(),
            format!("{}x{}", s.width, s.height),
            "-r".into(),
            format!("{}", s.fps),
            "-i".into(),
            "-".into(),
            "-i".into(),
            audio_wav.display().to_string(),
            "-c:v".into(),
            "libx264".into(),
            "-pix_fmt".into(),
            "yuv420p".into(),
            "-c:a".into(),
            "aac".into(),
            "-ar".into(),
            s.sample_rate.to_string(),
            "-shortest".into(),
            out.display().to_string(),
        ]
    }

    fn run(&self, program: &str, args: &[String]) -> Result<Vec<u8>, MediaError> {
        let output = Command::new(program)
            .args(args)
            .stdin(Stdio::null())
            .output()
            .map_err(|e| spawn_error(program, e))?;
        if !output.status.success() {
            return Err(MediaError::Tool {
                program: program.to_string(),
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        Ok(output.stdout)
    }
}

fn spawn_error(program: &str, e: std::io::Error) -> MediaError {
    if e.kind() == std::io::ErrorKind::NotFound {
        MediaError::ToolMissing {
            program: program.to_string(),
        }
    } else {
        MediaError::Tool {
            program: program.to_string(),
            status: "spawn failure".into(),
            stderr: e.to_string(),
        }
    }
}

/// Reads the fields we need out of `ffprobe -print_format json` output.
pub(crate) fn parse_probe(path: &Path, json: &[u8]) -> Result<MediaInfo, MediaError> {
    let v: Value =
        serde_json::from_slice(json).map_err(|e| MediaError::format(path, format!("ffprobe: {e}")))?;
    let streams = v["streams"].as_array().cloned().unwrap_or_default();
    let video = streams
        .iter()
        .find(|s| s["codec_type"] == "video")
        .ok_or_else(|| MediaError::format(path, "no video stream"))?;
    let audio = streams.iter().find(|s| s["codec_type"] == "audio");
    let fps = video["avg_frame_rate"]
        .as_str()
        .or(video["r_frame_rate"].as_str())
        .and_then(parse_rate)
        .ok_or_else(|| MediaError::format(path, "no frame rate"))?;
    let duration_s = v["format"]["duration"]
        .as_str()
        .or(video["duration"].as_str())
        .and_then(|d| d.parse::<f64>().ok())
        .ok_or_else(|| MediaError::format(path, "no duration"))?;
    Ok(MediaInfo {
        duration_s,
        fps,
        width: video["width"].as_u64().unwrap_or(0) as u32,
        height: video["height"].as_u64().unwrap_or(0) as u32,
        sample_rate: audio
            .and_then(|a| a["sample_rate"].as_str())
            .and_then(|r| r.parse().ok())
            .unwrap_or(crate::dsp::DEFAULT_SAMPLE_RATE),
    })
}

fn parse_rate(r: &str) -> Option<f64> {
    let (num, den) = r.split_once('/').unwrap_or((r, "1"));
    let (num, den): (f64, f64) = (num.parse().ok()?, den.parse().ok()?);
    (den > 0.0 && num > 0.0).then(|| num / den)
}

impl MediaToolkit for FfmpegToolkit {
    fn probe(&self, video: &Path) -> Result<MediaInfo, MediaError> {
        let out = self.run(&self.ffprobe, &Self::probe_args(video))?;
        parse_probe(video, &out)
    }

    fn frame_at(&self, video: &Path, at_s: f64) -> Result<RgbImage, MediaError> {
        let png = self.run(&self.ffmpeg, &Self::still_args(video, at_s))?;
        image::load_from_memory(&png)
            .map(|img| img.to_rgb8())
            .map_err(|e| MediaError::format(video, format!("still decode: {e}")))
    }

    fn frames(
        &self,
        video: &Path,
        span: TimeSpan,
        fps: f64,
        size: (u32, u32),
    ) -> Result<Vec<RgbImage>, MediaError> {
        let raw = self.run(&self.ffmpeg, &Self::frames_args(video, span, fps, size))?;
        let frame_len = (size.0 * size.1 * 3) as usize;
        let mut frames: Vec<RgbImage> = raw
            .chunks_exact(frame_len)
            .filter_map(|c| RgbImage::from_raw(size.0, size.1, c.to_vec()))
            .collect();
        frames.truncate(super::frame_count(span, fps));
        Ok(frames)
    }

    fn audio(
        &self,
        video: &Path,
        span: Option<TimeSpan>,
        sample_rate: u32,
    ) -> Result<Waveform, MediaError> {
        let raw = self.run(&self.ffmpeg, &Self::audio_args(video, span, sample_rate))?;
        let samples = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let w = Waveform::mono(samples, sample_rate);
        Ok(match span {
            Some(span) => w.with_frames(crate::dsp::seconds_to_samples(span.duration(), sample_rate)),
            None => w,
        })
    }

    fn encode(
        &self,
        out: &Path,
        settings: EncodeSettings,
        frames: &mut FrameStream<'_>,
        audio: &Waveform,
    ) -> Result<(), MediaError> {
        let wav = out.with_extension("mix.wav");
        audio
            .write_wav(&wav)
            .map_err(|e| MediaError::io(&wav, e))?;
        let mut child = Command::new(&self.ffmpeg)
            .args(Self::encode_args(out, &wav, settings))
            .stdin(Stdio::piped())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| spawn_error(&self.ffmpeg, e))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut write_result = Ok(());
        for frame in frames {
            let frame = frame?;
            let frame = if frame.dimensions() == (settings.width, settings.height) {
                frame
            } else {
                image::imageops::resize(
                    &frame,
                    settings.width,
                    settings.height,
                    image::imageops::FilterType::Triangle,
                )
            };
            if let Err(e) = stdin.write_all(frame.as_raw()) {
                write_result = Err(e);
                break;
            }
        }
        drop(stdin);
        let mut stderr = String::new();
        if let Some(mut pipe) = child.stderr.take() {
            let _ = pipe.read_to_string(&mut stderr);
        }
        let status = child.wait().map_err(|e| MediaError::io(out, e))?;
        let _ = std::fs::remove_file(&wav);
        if !status.success() || write_result.is_err() {
            return Err(MediaError::Tool {
                program: self.ffmpeg.clone(),
                status: status.to_string(),
                stderr: stderr.trim().to_string(),
            });
        }
        Ok(())
    }
}
