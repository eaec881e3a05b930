//! Synthetic test movie: flat color scenes with hard cuts, tone-burst
//! "speech" for scripted dialogue lines, and matching metadata.
//!
//! Consecutive scenes alternate between bright and dark colors so every cut
//! moves the HSV value channel by 191 levels.

use std::path::Path;

use chrono::NaiveDate;
use image::{Rgb, RgbImage};

use crate::dsp::{seconds_to_samples, Waveform, DEFAULT_SAMPLE_RATE};
use crate::media::{MediaError, TrvWriter};
use crate::metadata::MovieMetadata;
use crate::timeline::TimeSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaletteColor {
    pub name: &'static str,
    pub rgb: [u8; 3],
}

/// Hues 30 degrees apart; even entries at full value, odd entries at 64/255.
pub const PALETTE: [PaletteColor; 12] = [
    PaletteColor { name: "crimson", rgb: [255, 0, 0] },
    PaletteColor { name: "umber", rgb: [64, 32, 0] },
    PaletteColor { name: "golden", rgb: [255, 255, 0] },
    PaletteColor { name: "olive", rgb: [32, 64, 0] },
    PaletteColor { name: "emerald", rgb: [0, 255, 0] },
    PaletteColor { name: "pine", rgb: [0, 64, 32] },
    PaletteColor { name: "cyan", rgb: [0, 255, 255] },
    PaletteColor { name: "navy", rgb: [0, 32, 64] },
    PaletteColor { name: "azure", rgb: [0, 0, 255] },
    PaletteColor { name: "indigo", rgb: [32, 0, 64] },
    PaletteColor { name: "magenta", rgb: [255, 0, 255] },
    PaletteColor { name: "plum", rgb: [64, 0, 32] },
];

const SCENE_TEXT: [&str; 12] = [
    "A crimson lantern glows over a quiet harbor.",
    "An umber desert road stretches toward the hills.",
    "A golden field sways under the morning wind.",
    "An olive jeep waits beside a broken fence.",
    "An emerald forest hides a narrow path.",
    "A pine cabin sits alone beside the lake.",
    "A cyan signal flickers across the control room.",
    "A navy ship cuts through the night water.",
    "An azure sky opens above the launch tower.",
    "An indigo storm gathers over the city.",
    "A magenta sunset burns behind the mountains.",
    "A plum curtain falls on the empty stage.",
];

/// Index of the palette color named in `text`, if any.
pub fn palette_index(text: &str) -> Option<usize> {
    let toks = crate::text::tokens(text);
    PALETTE
        .iter()
        .position(|c| toks.iter().any(|t| t == c.name))
}

/// Palette entry closest to `rgb` (squared RGB distance).
pub fn nearest_palette(rgb: [f64; 3]) -> usize {
    let dist = |c: &PaletteColor| -> f64 {
        (0..3).map(|i| (c.rgb[i] as f64 - rgb[i]).powi(2)).sum()
    };
    (0..PALETTE.len())
        .min_by(|&a, &b| dist(&PALETTE[a]).total_cmp(&dist(&PALETTE[b])))
        .expect("palette is not empty")
}

pub const WORD_S: f64 = 0.28;
pub const WORD_GAP_S: f64 = 0.07;
pub const SPEECH_AMPLITUDE: f32 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct SpokenLine {
    pub speaker: String,
    pub text: String,
    pub start_s: f64,
}

impl SpokenLine {
    /// Each whitespace word and the span its tone burst occupies.
    pub fn word_spans(&self) -> Vec<(String, TimeSpan)> {
        word_spans(&self.text, self.start_s)
    }

    pub fn span(&self) -> TimeSpan {
        let spans = self.word_spans();
        TimeSpan::new(spans[0].1.start(), spans[spans.len() - 1].1.end()).expect("non-empty line")
    }
}

pub fn word_spans(text: &str, start_s: f64) -> Vec<(String, TimeSpan)> {
    text.split_whitespace()
        .enumerate()
        .map(|(k, w)| {
            let s = start_s + k as f64 * (WORD_S + WORD_GAP_S);
            (w.to_string(), TimeSpan::new(s, s + WORD_S).expect("positive word length"))
        })
        .collect()
}

/// Tone bursts for `text`, one per word, written into `out` from `start_s`.
pub fn render_tone_speech(out: &mut [f32], sample_rate: u32, text: &str, start_s: f64, base_hz: f64) {
    let ramp = seconds_to_samples(0.005, sample_rate).max(1);
    for (k, (_, span)) in word_spans(text, start_s).into_iter().enumerate() {
        let a = seconds_to_samples(span.start(), sample_rate);
        let n = seconds_to_samples(span.duration(), sample_rate);
        let hz = base_hz + 20.0 * (k % 5) as f64;
        for i in 0..n {
            let Some(slot) = out.get_mut(a + i) else { break };
            let edge = (i.min(n - 1 - i) as f64 / ramp as f64).min(1.0);
            let phase = 2.0 * std::f64::consts::PI * hz * i as f64 / sample_rate as f64;
            *slot += (SPEECH_AMPLITUDE as f64 * edge * phase.sin()) as f32;
        }
    }
}

/// Length of tone speech for `text`.
pub fn tone_speech_duration(text: &str) -> f64 {
    let n = text.split_whitespace().count().max(1) as f64;
    n * WORD_S + (n - 1.0) * WORD_GAP_S
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMovie {
    pub scenes: usize,
    pub scene_s: f64,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub sample_rate: u32,
    /// Scene (0-based) carrying a white caption bar.
    pub text_scene: Option<usize>,
    pub lines: Vec<SpokenLine>,
}

impl Default for SyntheticMovie {
    fn default() -> Self {
        SyntheticMovie {
            scenes: 12,
            scene_s: 5.0,
            fps: 24.0,
            width: 64,
            height: 36,
            sample_rate: DEFAULT_SAMPLE_RATE,
            text_scene: Some(6),
            lines: vec![
                SpokenLine {
                    speaker: "Mara".into(),
                    text: "We have to keep moving before the light is gone.".into(),
                    // starts 0.3 s before the cut at 15.0
                    start_s: 14.7,
                },
                SpokenLine {
                    speaker: "Jonah".into(),
                    text: "Hope is the only thing stronger than fear.".into(),
                    start_s: 41.0,
                },
            ],
        }
    }
}

impl SyntheticMovie {
    pub fn duration_s(&self) -> f64 {
        self.scenes as f64 * self.scene_s
    }

    pub fn frames_per_scene(&self) -> usize {
        (self.scene_s * self.fps).round() as usize
    }

    pub fn frame_count(&self) -> usize {
        self.scenes * self.frames_per_scene()
    }

    /// Frame indices where a new scene starts (excluding frame 0).
    pub fn cut_frames(&self) -> Vec<usize> {
        (1..self.scenes).map(|s| s * self.frames_per_scene()).collect()
    }

    pub fn scene_color(&self, scene: usize) -> PaletteColor {
        PALETTE[scene % PALETTE.len()]
    }

    pub fn scene_text(&self, scene: usize) -> &'static str {
        SCENE_TEXT[scene % SCENE_TEXT.len()]
    }

    pub fn frame(&self, index: usize) -> RgbImage {
        let scene = (index / self.frames_per_scene()).min(self.scenes - 1);
        let mut img = RgbImage::from_pixel(self.width, self.height, Rgb(self.scene_color(scene).rgb));
        if self.text_scene == Some(scene) {
            let bar = (self.height / 8).max(1);
            for y in self.height - 2 * bar..self.height - bar {
                for x in self.width / 8..self.width - self.width / 8 {
                    img.put_pixel(x, y, Rgb([255, 255, 255]));
                }
            }
        }
        img
    }

    pub fn audio(&self) -> Waveform {
        let mut samples = vec![0.0f32; seconds_to_samples(self.duration_s(), self.sample_rate)];
        for line in &self.lines {
            render_tone_speech(&mut samples, self.sample_rate, &line.text, line.start_s, 180.0);
        }
        Waveform::mono(samples, self.sample_rate)
    }

    pub fn write(&self, path: &Path) -> Result<(), MediaError> {
        let mut w = TrvWriter::create(path, self.width, self.height, self.fps, self.sample_rate)?;
        for i in 0..self.frame_count() {
            w.push_frame(&self.frame(i))?;
        }
        w.finish(&self.audio())
    }

    pub fn synopsis(&self) -> String {
        (0..self.scenes)
            .map(|s| self.scene_text(s))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn metadata(&self) -> MovieMetadata {
        let mut quotes: Vec<String> = self
            .lines
            .iter()
            .map(|l| format!("{}: {}", l.speaker, l.text))
            .collect();
        quotes.extend(
            [
                "[whispers] Stay.",
                "Mara: Go. Jonah: Now.",
                "I will kill them all if I must, and I will not be sorry.",
                "You were brave when it mattered most and I will remember that.",
                "The map is on the table",
                "It is what it is.",
            ]
            .map(str::to_string),
        );
        MovieMetadata {
            imdb_id: "tt9900001".into(),
            title: "Chromatic Drift".into(),
            synopsis: self.synopsis(),
            quotes_raw: quotes,
            genres: vec!["Sci-Fi".into(), "Drama".into()],
            director: "Ada Lindqvist".into(),
            release_date: NaiveDate::from_ymd_opt(2024, 11, 8).expect("valid date"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{hsv_means, MediaToolkit, NativeToolkit};

    #[test]
    fn consecutive_scenes_differ_by_twice_the_cut_threshold() {
        let m = SyntheticMovie::default();
        for s in 1..m.scenes {
            let a = hsv_means(&m.frame((s - 1) * m.frames_per_scene()));
            let b = hsv_means(&m.frame(s * m.frames_per_scene()));
            let d = (0..3).map(|i| (a[i] - b[i]).abs()).sum::<f64>() / 3.0;
            assert!(d >= 54.0, "scene {s}: {d}");
        }
    }

    #[test]
    fn palette_lookup() {
        assert_eq!(palette_index("A Crimson lantern."), Some(0));
        assert_eq!(palette_index("nothing here"), None);
        assert_eq!(nearest_palette([250.0, 10.0, 5.0]), 0);
        let m = SyntheticMovie::default();
        let img = m.frame(6 * m.frames_per_scene());
        let mean = img.pixels().fold([0.0; 3], |mut acc, p| {
            for i in 0..3 {
                acc[i] += p.0[i] as f64;
            }
            acc
        });
        let n = (img.width() * img.height()) as f64;
        assert_eq!(nearest_palette(mean.map(|v| v / n)), 6);
    }

    #[test]
    fn first_line_straddles_a_cut() {
        let m = SyntheticMovie::default();
        let span = m.lines[0].span();
        assert!(span.start() < 15.0 && span.end() > 15.0);
        assert!((span.duration() - tone_speech_duration(&m.lines[0].text)).abs() < 1e-9);
    }

    #[test]
    fn written_movie_probes_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("movie.trv");
        let m = SyntheticMovie::default();
        m.write(&path).unwrap();
        let info = NativeToolkit.probe(&path).unwrap();
        assert_eq!(info.duration_s, 60.0);
        assert_eq!((info.width, info.height), (64, 36));
        let audio = NativeToolkit.audio(&path, None, m.sample_rate).unwrap();
        assert_eq!(audio.frames(), 60 * 44_100);
        assert!(audio.peak() > 0.25);
    }
}
