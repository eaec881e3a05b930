//! The `.trv` container: a fixed 1 KiB JSON header, raw RGB24 frames, then
//! 16-bit mono PCM.
//!
//! ```text
//! "TRV1" | header (1020 bytes, space padded JSON) | frames | audio
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{EncodeSettings, FrameStream, MediaError, MediaInfo, MediaToolkit};
use crate::dsp::Waveform;
use crate::timeline::TimeSpan;

pub const TRV_EXTENSION: &str = "trv";
const MAGIC: &[u8; 4] = b"TRV1";
const HEADER_BYTES: usize = 1020;
const DATA_OFFSET: u64 = (MAGIC.len() + HEADER_BYTES) as u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Header {
    width: u32,
    height: u32,
    fps: f64,
    frame_count: u64,
    sample_rate: u32,
    audio_frames: u64,
}

impl Header {
    fn frame_bytes(&self) -> u64 {
        self.width as u64 * self.height as u64 * 3
    }

    fn audio_offset(&self) -> u64 {
        DATA_OFFSET + self.frame_bytes() * self.frame_count
    }

    fn info(&self) -> MediaInfo {
        MediaInfo {
            duration_s: self.frame_count as f64 / self.fps,
            fps: self.fps,
            width: self.width,
            height: self.height,
            sample_rate: self.sample_rate,
        }
    }
}

pub struct TrvReader {
    header: Header,
    file: Mutex<File>,
    path: std::path::PathBuf,
}

impl TrvReader {
    pub fn open(path: &Path) -> Result<TrvReader, MediaError> {
        let mut file = File::open(path).map_err(|e| MediaError::io(path, e))?;
        let mut head = vec![0u8; DATA_OFFSET as usize];
        file.read_exact(&mut head)
            .map_err(|_| MediaError::format(path, "truncated header"))?;
        if &head[..4] != MAGIC {
            return Err(MediaError::format(path, "not a TRV1 container"));
        }
        let json = std::str::from_utf8(&head[4..])
            .map_err(|_| MediaError::format(path, "header is not utf-8"))?;
        let header: Header = serde_json::from_str(json.trim_end())
            .map_err(|e| MediaError::format(path, format!("bad header: {e}")))?;
        if header.fps <= 0.0 || header.width == 0 || header.height == 0 {
            return Err(MediaError::format(path, "degenerate header"));
        }
        let expected = header.audio_offset() + header.audio_frames * 2;
        let actual = file.metadata().map_err(|e| MediaError::io(path, e))?.len();
        if actual != expected {
            return Err(MediaError::format(
                path,
                format!("size {actual} does not match header ({expected})"),
            ));
        }
        Ok(TrvReader {
            header,
            file: Mutex::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn info(&self) -> MediaInfo {
        self.header.info()
    }

    pub fn frame_count(&self) -> usize {
        self.header.frame_count as usize
    }

    pub fn frame(&self, index: usize) -> Result<RgbImage, MediaError> {
        let idx = (index as u64).min(self.header.frame_count.saturating_sub(1));
        let len = self.header.frame_bytes();
        let mut buf = vec![0u8; len as usize];
        let mut file = self.file.lock().expect("trv reader poisoned");
        file.seek(SeekFrom::Start(DATA_OFFSET + idx * len))
            .and_then(|_| file.read_exact(&mut buf))
            .map_err(|e| MediaError::io(&self.path, e))?;
        RgbImage::from_raw(self.header.width, self.header.height, buf)
            .ok_or_else(|| MediaError::format(&self.path, "frame size"))
    }

    /// Index of the frame shown at `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let i = (t.max(0.0) * self.header.fps + 1e-6).floor() as u64;
        i.min(self.header.frame_count.saturating_sub(1)) as usize
    }

    pub fn audio(&self) -> Result<Waveform, MediaError> {
        let mut buf = vec![0u8; (self.header.audio_frames * 2) as usize];
        let mut file = self.file.lock().expect("trv reader poisoned");
        file.seek(SeekFrom::Start(self.header.audio_offset()))
            .and_then(|_| file.read_exact(&mut buf))
            .map_err(|e| MediaError::io(&self.path, e))?;
        let samples = buf
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / i16::MAX as f32)
            .collect();
        Ok(Waveform::mono(samples, self.header.sample_rate))
    }
}

/// Streaming writer; the header is rewritten with final counts on finish.
pub struct TrvWriter {
    header: Header,
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl TrvWriter {
    pub fn create(path: &Path, width: u32, height: u32, fps: f64, sample_rate: u32) -> Result<TrvWriter, MediaError> {
        let file = File::create(path).map_err(|e| MediaError::io(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&[0u8; DATA_OFFSET as usize])
            .map_err(|e| MediaError::io(path, e))?;
        Ok(TrvWriter {
            header: Header {
                width,
                height,
                fps,
                frame_count: 0,
                sample_rate,
                audio_frames: 0,
            },
            out,
            path: path.to_path_buf(),
        })
    }

    pub fn push_frame(&mut self, frame: &RgbImage) -> Result<(), MediaError> {
        if frame.dimensions() != (self.header.width, self.header.height) {
            return Err(MediaError::Unsupported(format!(
                "frame is {:?}, container is {}x{}",
                frame.dimensions(),
                self.header.width,
                self.header.height
            )));
        }
        self.out
            .write_all(frame.as_raw())
            .map_err(|e| MediaError::io(&self.path, e))?;
        self.header.frame_count += 1;
        Ok(())
    }

    pub fn finish(mut self, audio: &Waveform) -> Result<(), MediaError> {
        let mono = audio.to_mono();
        if mono.sample_rate != self.header.sample_rate {
            return Err(MediaError::Unsupported(format!(
                "audio at {} Hz, container at {} Hz",
                mono.sample_rate, self.header.sample_rate
            )));
        }
        for &s in &mono.samples {
            let v = (s.clamp(-1.0, 1.0) * i16::MAX as f32).round() as i16;
            self.out
                .write_all(&v.to_le_bytes())
                .map_err(|e| MediaError::io(&self.path, e))?;
        }
        self.header.audio_frames = mono.samples.len() as u64;
        let json = serde_json::to_string(&self.header).expect("header serializes");
        if json.len() > HEADER_BYTES {
            return Err(MediaError::Unsupported("header overflow".into()));
        }
        let mut head = Vec::with_capacity(DATA_OFFSET as usize);
        head.extend_from_slice(MAGIC);
        head.extend_from_slice(json.as_bytes());
        head.resize(DATA_OFFSET as usize, b' ');
        let path = self.path.clone();
        let io = |e: std::io::Error| MediaError::io(&path, e);
        self.out.seek(SeekFrom::Start(0)).map_err(io)?;
        self.out.write_all(&head).map_err(io)?;
        self.out.flush().map_err(io)?;
        Ok(())
    }
}

fn fit(img: RgbImage, (w, h): (u32, u32)) -> RgbImage {
    if img.dimensions() == (w, h) {
        img
    } else {
        image::imageops::resize(&img, w, h, image::imageops::FilterType::Triangle)
    }
}

/// Toolkit for `.trv` containers; no external processes.
#[derive(Debug, Clone, Copy, Default)]
pub struct NativeToolkit;

impl MediaToolkit for NativeToolkit {
    fn probe(&self, video: &Path) -> Result<MediaInfo, MediaError> {
        Ok(TrvReader::open(video)?.info())
    }

    fn frame_at(&self, video: &Path, at_s: f64) -> Result<RgbImage, MediaError> {
        let reader = TrvReader::open(video)?;
        reader.frame(reader.index_at(at_s))
    }

    fn frames(
        &self,
        video: &Path,
        span: TimeSpan,
        fps: f64,
        size: (u32, u32),
    ) -> Result<Vec<RgbImage>, MediaError> {
        let reader = TrvReader::open(video)?;
        (0..super::frame_count(span, fps))
            .map(|i| {
                let t = span.start() + i as f64 / fps;
                reader.frame(reader.index_at(t)).map(|f| fit(f, size))
            })
            .collect()
    }

    fn audio(
        &self,
        video: &Path,
        span: Option<TimeSpan>,
        sample_rate: u32,
    ) -> Result<Waveform, MediaError> {
        let reader = TrvReader::open(video)?;
        let full = reader.audio()?.resampled(sample_rate);
        Ok(match span {
            Some(span) => {
                let start = crate::dsp::seconds_to_samples(span.start(), sample_rate);
                let len = crate::dsp::seconds_to_samples(span.duration(), sample_rate);
                full.slice_frames(start, start + len).with_frames(len)
            }
            None => full,
        })
    }

    fn encode(
        &self,
        out: &Path,
        settings: EncodeSettings,
        frames: &mut FrameStream<'_>,
        audio: &Waveform,
    ) -> Result<(), MediaError> {
        let mut writer = TrvWriter::create(
            out,
            settings.width,
            settings.height,
            settings.fps,
            settings.sample_rate,
        )?;
        for frame in frames {
            writer.push_frame(&fit(frame?, (settings.width, settings.height)))?;
        }
        writer.finish(audio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid(w: u32, h: u32, rgb: [u8; 3]) -> RgbImage {
        RgbImage::from_pixel(w, h, image::Rgb(rgb))
    }

    #[test]
    fn write_then_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clip.trv");
        let mut w = TrvWriter::create(&path, 4, 2, 10.0, 100).unwrap();
        for i in 0..20u8 {
            w.push_frame(&solid(4, 2, [i * 10, 0, 0])).unwrap();
        }
        let audio = Waveform::mono((0..200).map(|i| (i as f32 / 200.0) - 0.5).collect(), 100);
        w.finish(&audio).unwrap();

        let tk = NativeToolkit;
        let info = tk.probe(&path).unwrap();
        assert_eq!((info.width, info.height, info.fps, info.sample_rate), (4, 2, 10.0, 100));
        assert!((info.duration_s - 2.0).abs() < 1e-12);
        assert_eq!(tk.frame_at(&path, 0.55).unwrap().get_pixel(0, 0).0, [50, 0, 0]);
        let span = TimeSpan::new(1.0, 1.5).unwrap();
        let frames = tk.frames(&path, span, 10.0, (2, 2)).unwrap();
        assert_eq!(frames.len(), 5);
        assert_eq!(frames[0].dimensions(), (2, 2));
        assert_eq!(frames[4].get_pixel(0, 0).0, [140, 0, 0]);
        let a = tk.audio(&path, Some(span), 100).unwrap();
        assert_eq!(a.samples.len(), 50);
        assert!((a.samples[0] - 0.0).abs() < 1e-4);
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.trv");
        std::fs::write(&path, b"RIFF....").unwrap();
        assert!(matches!(NativeToolkit.probe(&path), Err(MediaError::Format { .. })));
    }

    #[test]
    fn wrong_frame_size_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = TrvWriter::create(&dir.path().join("x.trv"), 4, 2, 10.0, 100).unwrap();
        assert!(w.push_frame(&solid(3, 2, [0, 0, 0])).is_err());
    }
}
