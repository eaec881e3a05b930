//! Sample-level audio primitives: loudness, gain, fades, sidechain ducking
//! and mixing. Everything here is a pure function of its inputs.
//!
//! Processing is mono `f32`; stereo input is downmixed with
//! [`Waveform::to_mono`] and only upmixed again when a container is written.

use std::io::Cursor;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Interleaved samples in `[-1, 1]`.
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl Waveform {
    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Waveform {
        Waveform {
            samples,
            sample_rate,
            channels: 1,
        }
    }

    pub fn silence(frames: usize, sample_rate: u32) -> Waveform {
        Waveform::mono(vec![0.0; frames], sample_rate)
    }

    pub fn silence_for(duration_s: f64, sample_rate: u32) -> Waveform {
        Waveform::silence(seconds_to_samples(duration_s, sample_rate), sample_rate)
    }

    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn to_mono(&self) -> Waveform {
        if self.channels <= 1 {
            return self.clone();
        }
        let ch = self.channels as usize;
        let samples = self
            .samples
            .chunks_exact(ch)
            .map(|frame| frame.iter().sum::<f32>() / ch as f32)
            .collect();
        Waveform::mono(samples, self.sample_rate)
    }

    /// Sub-range by sample frame indices, clamped to the waveform.
    pub fn slice_frames(&self, start: usize, end: usize) -> Waveform {
        let ch = self.channels.max(1) as usize;
        let n = self.frames();
        let (s, e) = (start.min(n), end.min(n).max(start.min(n)));
        Waveform {
            samples: self.samples[s * ch..e * ch].to_vec(),
            sample_rate: self.sample_rate,
            channels: self.channels,
        }
    }

    pub fn slice_seconds(&self, start_s: f64, end_s: f64) -> Waveform {
        self.slice_frames(
            seconds_to_samples(start_s, self.sample_rate),
            seconds_to_samples(end_s, self.sample_rate),
        )
    }

    /// Zero-pads or truncates to exactly `frames`.
    pub fn with_frames(mut self, frames: usize) -> Waveform {
        let ch = self.channels.max(1) as usize;
        self.samples.resize(frames * ch, 0.0);
        self
    }

    pub fn reversed(&self) -> Waveform {
        let ch = self.channels.max(1) as usize;
        let mut samples = Vec::with_capacity(self.samples.len());
        for frame in self.samples.chunks_exact(ch).rev() {
            samples.extend_from_slice(frame);
        }
        Waveform { samples, ..*self }
    }

    /// Linear-interpolation resample of a mono signal.
    pub fn resampled(&self, sample_rate: u32) -> Waveform {
        let mono = self.to_mono();
        if mono.sample_rate == sample_rate || mono.samples.is_empty() {
            return Waveform { sample_rate: mono.sample_rate.max(1), ..mono };
        }
        let ratio = mono.sample_rate as f64 / sample_rate as f64;
        let out_len = ((mono.samples.len() as f64) / ratio).round() as usize;
        let last = mono.samples.len() - 1;
        let samples = (0..out_len)
            .map(|i| {
                let pos = i as f64 * ratio;
                let i0 = (pos.floor() as usize).min(last);
                let i1 = (i0 + 1).min(last);
                let frac = pos - i0 as f64;
                (mono.samples[i0] as f64 * (1.0 - frac) + mono.samples[i1] as f64 * frac) as f32
            })
            .collect();
        Waveform::mono(samples, sample_rate)
    }

    /// 16-bit PCM WAV bytes.
    pub fn to_wav_bytes(&self) -> Result<Vec<u8>> {
        let spec = hound::WavSpec {
            channels: self.channels.max(1),
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut writer = hound::WavWriter::new(&mut cursor, spec)
                .map_err(|e| Error::InvalidInput(format!("wav encode: {e}")))?;
            for &s in &self.samples {
                writer
                    .write_sample(quantize_i16(s))
                    .map_err(|e| Error::InvalidInput(format!("wav encode: {e}")))?;
            }
            writer
                .finalize()
                .map_err(|e| Error::InvalidInput(format!("wav encode: {e}")))?;
        }
        Ok(cursor.into_inner())
    }

    pub fn from_wav_bytes(bytes: &[u8]) -> Result<Waveform> {
        let mut reader = hound::WavReader::new(Cursor::new(bytes))
            .map_err(|e| Error::InvalidInput(format!("wav decode: {e}")))?;
        let spec = reader.spec();
        let samples: std::result::Result<Vec<f32>, _> = match spec.sample_format {
            hound::SampleFormat::Float => reader.samples::<f32>().collect(),
            hound::SampleFormat::Int => {
                let scale = (1i64 << (spec.bits_per_sample - 1)) as f32;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f32 / scale))
                    .collect()
            }
        };
        let samples = samples.map_err(|e| Error::InvalidInput(format!("wav decode: {e}")))?;
        Ok(Waveform {
            samples,
            sample_rate: spec.sample_rate,
            channels: spec.channels,
        })
    }

    pub fn write_wav(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_wav_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_wav(path: &std::path::Path) -> Result<Waveform> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Waveform::from_wav_bytes(&bytes)
    }
}

fn quantize_i16(s: f32) -> i16 {
    (s.clamp(-1.0, 1.0) * i16::MAX as f32).round() as i16
}

pub fn seconds_to_samples(seconds: f64, sample_rate: u32) -> usize {
    (seconds.max(0.0) * sample_rate as f64).round() as usize
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    if lin <= 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * lin.log10()
    }
}

/// RMS level in dBFS; silence yields `-inf`.
pub fn rms_dbfs(w: &Waveform) -> f64 {
    linear_to_db(rms(&w.samples))
}

fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (sum / samples.len() as f64).sqrt()
}

/// Scales every sample by `gain_db`, hard-limited to `[-1, 1]`.
pub fn apply_gain(w: &Waveform, gain_db: f64) -> Waveform {
    let factor = db_to_linear(gain_db);
    Waveform {
        samples: w
            .samples
            .iter()
            .map(|&s| ((s as f64) * factor).clamp(-1.0, 1.0) as f32)
            .collect(),
        ..*w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoudnessMatch {
    pub waveform: Waveform,
    pub gain_db: f64,
    /// The peak ceiling capped the gain below what the target asked for.
    pub ceiling_bound: bool,
    /// Input was silent and returned unchanged.
    pub silent: bool,
}

/// Gains `w` so its RMS hits `target_dbfs`, never lifting the peak above
/// `ceiling_dbfs`.
pub fn match_loudness(w: &Waveform, target_dbfs: f64, ceiling_dbfs: f64) -> LoudnessMatch {
    let current = rms_dbfs(w);
    if !current.is_finite() {
        return LoudnessMatch {
            waveform: w.clone(),
            gain_db: 0.0,
            ceiling_bound: false,
            silent: true,
        };
    }
    let wanted = target_dbfs - current;
    let headroom = ceiling_dbfs - linear_to_db(w.peak() as f64);
    let (gain_db, ceiling_bound) = if wanted > headroom {
        (headroom, true)
    } else {
        (wanted, false)
    };
    LoudnessMatch {
        waveform: apply_gain(w, gain_db),
        gain_db,
        ceiling_bound,
        silent: false,
    }
}

/// Ramp factor for position `k` of an `n`-sample linear ramp from 0 to 1.
fn ramp(k: usize, n: usize) -> f64 {
    if k >= n {
        1.0
    } else if n == 1 {
        0.0
    } else {
        k as f64 / (n - 1) as f64
    }
}

/// Linear fade-in and fade-out. When the fades together exceed the
/// duration both shrink proportionally.
pub fn fade(w: &Waveform, fade_in_s: f64, fade_out_s: f64) -> Waveform {
    let frames = w.frames();
    let duration = w.duration_s();
    let (mut fin, mut fout) = (fade_in_s.max(0.0), fade_out_s.max(0.0));
    if fin + fout > duration && fin + fout > 0.0 {
        let scale = duration / (fin + fout);
        fin *= scale;
        fout *= scale;
    }
    let n_in = seconds_to_samples(fin, w.sample_rate).min(frames);
    let n_out = seconds_to_samples(fout, w.sample_rate).min(frames);
    if n_in == 0 && n_out == 0 {
        return w.clone();
    }
    let ch = w.channels.max(1) as usize;
    let mut out = w.clone();
    for (i, frame) in out.samples.chunks_exact_mut(ch).enumerate() {
        let g = ramp(i, n_in) * ramp(frames - 1 - i, n_out);
        if g != 1.0 {
            for s in frame {
                *s = ((*s as f64) * g) as f32;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DuckParams {
    pub duck_db: f64,
    pub threshold_dbfs: f64,
    pub attack_s: f64,
    pub release_s: f64,
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for DuckParams {
    fn default() -> Self {
        DuckParams {
            duck_db: -12.0,
            threshold_dbfs: -40.0,
            attack_s: 0.05,
            release_s: 0.5,
            window_s: 0.05,
            hop_s: 0.01,
        }
    }
}

impl DuckParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.duck_db < 0.0) {
            return Err(Error::Config("duck_db must be negative".into()));
        }
        if !(self.attack_s > 0.0 && self.release_s > 0.0) {
            return Err(Error::Config("attack and release must be positive".into()));
        }
        if !(self.window_s > 0.0 && self.hop_s > 0.0) {
            return Err(Error::Config("envelope window and hop must be positive".into()));
        }
        Ok(())
    }

    fn window_samples(&self, sr: u32) -> (usize, usize) {
        (
            seconds_to_samples(self.window_s, sr).max(1),
            seconds_to_samples(self.hop_s, sr).max(1),
        )
    }
}

/// One-pole smoothing coefficient for a time constant of `tau_s` seconds.
pub(crate) fn one_pole(tau_s: f64, sr: u32) -> f64 {
    1.0 - (-1.0 / (tau_s * sr as f64)).exp()
}

/// Per-sample linear gain the ducker applies to a music bed of `len`
/// samples against `foreground`.
pub fn duck_gain_curve(foreground: &[f32], len: usize, sr: u32, p: &DuckParams) -> Vec<f64> {
    let (win, hop) = p.window_samples(sr);
    let n = foreground.len();
    // prefix sums of squares so each hop frame's window is O(1)
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0f64);
    let mut acc = 0.0f64;
    for &s in foreground {
        acc += (s as f64) * (s as f64);
        prefix.push(acc);
    }
    let frame_count = n.div_ceil(hop);
    let loud: Vec<bool> = (0..frame_count)
        .map(|m| {
            let start = m * hop;
            let end = (start + win).min(n);
            let mean = (prefix[end] - prefix[start]) / (end - start) as f64;
            linear_to_db(mean.sqrt()) > p.threshold_dbfs
        })
        .collect();

    let duck = db_to_linear(p.duck_db);
    let (a_att, a_rel) = (one_pole(p.attack_s, sr), one_pole(p.release_s, sr));
    let mut g = 1.0f64;
    (0..len)
        .map(|i| {
            let target = if i < n && loud[i / hop] { duck } else { 1.0 };
            if target != g {
                let a = if target < g { a_att } else { a_rel };
                g += a * (target - g);
            }
            g
        })
        .collect()
}

/// Sidechain ducking: attenuates `music` while `foreground` is above the
/// threshold. The shorter input is treated as zero-padded.
pub fn duck(music: &Waveform, foreground: &Waveform, p: &DuckParams) -> Result<Waveform> {
    p.validate()?;
    let music = music.to_mono();
    let fg = foreground.to_mono();
    if music.sample_rate != fg.sample_rate {
        return Err(Error::InvalidInput(format!(
            "duck: sample rates differ ({} vs {})",
            music.sample_rate, fg.sample_rate
        )));
    }
    let len = music.samples.len().max(fg.samples.len());
    let gains = duck_gain_curve(&fg.samples, len, music.sample_rate, p);
    let samples = gains
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let s = music.samples.get(i).copied().unwrap_or(0.0);
            if g == 1.0 {
                s
            } else {
                ((s as f64) * g) as f32
            }
        })
        .collect();
    Ok(Waveform::mono(samples, music.sample_rate))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutput {
    pub waveform: Waveform,
    /// The summed peak exceeded the limiter ceiling before clipping.
    pub limited: bool,
}

pub const LIMITER_CEILING_DBFS: f64 = -1.0;

/// Sums tracks at their offsets (seconds), then hard-clips to `[-1, 1]`.
pub fn mix(tracks: &[(&Waveform, f64)]) -> Result<MixOutput> {
    let Some((first, _)) = tracks.first() else {
        return Err(Error::InvalidInput("mix: no tracks".into()));
    };
    let (sr, ch) = (first.sample_rate, first.channels.max(1));
    let mut len = 0usize;
    for (w, offset) in tracks {
        if *offset < 0.0 || !offset.is_finite() {
            return Err(Error::InvalidInput(format!("mix: bad offset {offset}")));
        }
        if w.sample_rate != sr || w.channels.max(1) != ch {
            return Err(Error::InvalidInput("mix: tracks differ in rate or channels".into()));
        }
        len = len.max(seconds_to_samples(*offset, sr) * ch as usize + w.samples.len());
    }
    let mut acc = vec![0.0f64; len];
    for (w, offset) in tracks {
        let start = seconds_to_samples(*offset, sr) * ch as usize;
        for (slot, &s) in acc[start..].iter_mut().zip(&w.samples) {
            *slot += s as f64;
        }
    }
    let ceiling = db_to_linear(LIMITER_CEILING_DBFS);
    let limited = acc.iter().any(|s| s.abs() > ceiling);
    let samples = acc.into_iter().map(|s| s.clamp(-1.0, 1.0) as f32).collect();
    Ok(MixOutput {
        waveform: Waveform {
            samples,
            sample_rate: sr,
            channels: ch,
        },
        limited,
    })
}

/// Joins waveforms end to end.
pub fn concat(parts: &[Waveform]) -> Result<Waveform> {
    let Some(first) = parts.first() else {
        return Err(Error::InvalidInput("concat: nothing to join".into()));
    };
    if parts
        .iter()
        .any(|p| p.sample_rate != first.sample_rate || p.channels != first.channels)
    {
        return Err(Error::InvalidInput("concat: parts differ in rate or channels".into()));
    }
    Ok(Waveform {
        samples: parts.iter().flat_map(|p| p.samples.iter().copied()).collect(),
        sample_rate: first.sample_rate,
        channels: first.channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sine(freq: f64, amp: f32, secs: f64, sr: u32) -> Waveform {
        let n = seconds_to_samples(secs, sr);
        Waveform::mono(
            (0..n)
                .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin() as f32)
                .collect(),
            sr,
        )
    }

    fn constant(v: f32, n: usize, sr: u32) -> Waveform {
        Waveform::mono(vec![v; n], sr)
    }

    #[test]
    fn rms_of_reference_signals() {
        assert!((rms_dbfs(&sine(1000.0, 1.0, 1.0, 44_100)) + 3.0103).abs() < 0.01);
        assert_eq!(rms_dbfs(&constant(0.0, 100, 44_100)), f64::NEG_INFINITY);
        assert!((rms_dbfs(&constant(0.5, 100, 44_100)) + 6.0206).abs() < 0.01);
    }

    #[test]
    fn zero_gain_is_identity() {
        let w = sine(440.0, 0.7, 0.1, 8000);
        assert_eq!(apply_gain(&w, 0.0), w);
    }

    #[test]
    fn loudness_match_doubles_a_quarter() {
        let m = match_loudness(&constant(0.25, 1000, 8000), -6.02, -1.0);
        assert!(!m.ceiling_bound);
        assert!(m.waveform.samples.iter().all(|&s| (s - 0.5).abs() < 1e-3));
        assert!((rms_dbfs(&m.waveform) + 6.02).abs() < 0.1);
    }

    #[test]
    fn loudness_match_is_capped_by_ceiling() {
        let w = sine(440.0, 0.9, 0.2, 8000);
        let target = rms_dbfs(&w) + 12.0;
        let m = match_loudness(&w, target, -1.0);
        assert!(m.ceiling_bound);
        assert!(linear_to_db(m.waveform.peak() as f64) <= -1.0 + 1e-4);
    }

    #[test]
    fn loudness_match_leaves_silence() {
        let w = constant(0.0, 10, 8000);
        let m = match_loudness(&w, -20.0, -1.0);
        assert!(m.silent);
        assert_eq!(m.waveform, w);
    }

    #[test]
    fn fade_ramp_definition() {
        let out = fade(&constant(1.0, 8, 4), 1.0, 0.0);
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (a, b) in out.samples.iter().zip(expect) {
            assert!((*a as f64 - b).abs() < 1e-6);
        }
        let w = sine(3.0, 0.8, 1.0, 100);
        assert_eq!(fade(&w, 0.0, 0.0), w);
    }

    #[test]
    fn fades_longer_than_clip_shrink_proportionally() {
        let w = constant(1.0, 8, 4); // 2 s
        let out = fade(&w, 2.0, 2.0);
        assert_eq!(out, fade(&w, 1.0, 1.0));
        assert_eq!(out.samples[0], 0.0);
        assert_eq!(*out.samples.last().unwrap(), 0.0);
    }

    #[test]
    fn duck_silent_foreground_is_bit_identical() {
        let music = sine(220.0, 0.5, 1.0, 8000);
        let out = duck(&music, &constant(0.0, 8000, 8000), &DuckParams::default()).unwrap();
        assert_eq!(out.samples, music.samples);
    }

    #[test]
    fn duck_reaches_steady_state() {
        let sr = 8000;
        let music = constant(0.5, sr as usize * 3, sr);
        let fg = sine(300.0, 0.5, 3.0, sr);
        let out = duck(&music, &fg, &DuckParams::default()).unwrap();
        let g = *out.samples.last().unwrap() as f64 / 0.5;
        assert!((linear_to_db(g) + 12.0).abs() < 0.1);
    }

    #[test]
    fn mix_identity_and_sum() {
        let a = constant(0.4, 10, 100);
        let m = mix(&[(&a, 0.0)]).unwrap();
        assert_eq!(m.waveform, a);
        let m = mix(&[(&a, 0.0), (&a, 0.0)]).unwrap();
        assert!(m.waveform.samples.iter().all(|&s| (s - 0.8).abs() < 1e-6));
        assert!(!m.limited);
        let b = constant(0.7, 10, 100);
        let m = mix(&[(&a, 0.0), (&b, 0.0)]).unwrap();
        assert!(m.limited);
        assert!(m.waveform.samples.iter().all(|&s| s <= 1.0));
        assert!(mix(&[(&a, -0.5)]).is_err());
    }

    #[test]
    fn mix_offsets_and_concat() {
        let a = constant(0.25, 4, 4);
        let m = mix(&[(&a, 0.0), (&a, 0.5)]).unwrap().waveform;
        assert_eq!(m.samples, vec![0.25, 0.25, 0.5, 0.5, 0.25, 0.25]);
        let c = concat(&[a.clone(), constant(0.5, 2, 4)]).unwrap();
        assert_eq!(c.samples, vec![0.25, 0.25, 0.25, 0.25, 0.5, 0.5]);
    }

    #[test]
    fn wav_round_trip_is_within_quantization() {
        let w = sine(440.0, 0.8, 0.05, 16_000);
        let back = Waveform::from_wav_bytes(&w.to_wav_bytes().unwrap()).unwrap();
        assert_eq!(back.frames(), w.frames());
        assert!(back
            .samples
            .iter()
            .zip(&w.samples)
            .all(|(a, b)| (a - b).abs() < 1.0 / 16_000.0));
    }

    proptest! {
        #[test]
        fn fade_reverse_symmetry(samples in prop::collection::vec(-1.0f32..1.0, 2..400), a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let w = Waveform::mono(samples, 50);
            prop_assert_eq!(fade(&w.reversed(), a, b), fade(&w, b, a).reversed());
        }

        #[test]
        fn duck_never_amplifies(music in prop::collection::vec(-1.0f32..1.0, 1..3000), fg in prop::collection::vec(-1.0f32..1.0, 1..3000)) {
            let p = DuckParams::default();
            let m = Waveform::mono(music, 4000);
            let out = duck(&m, &Waveform::mono(fg, 4000), &p).unwrap();
            let floor = db_to_linear(p.duck_db) as f32;
            for (i, o) in out.samples.iter().enumerate() {
                let s = m.samples.get(i).copied().unwrap_or(0.0);
                prop_assert!(o.abs() <= s.abs());
                prop_assert!(o.abs() >= s.abs() * floor - 1e-6);
            }
        }

        #[test]
        fn loudness_match_hits_target(amp in 0.01f32..0.3, target in -40.0f64..-15.0) {
            let w = sine(440.0, amp, 0.25, 8000);
            let m = match_loudness(&w, target, -1.0);
            prop_assume!(!m.ceiling_bound);
            prop_assert!((rms_dbfs(&m.waveform) - target).abs() <= 0.1);
        }
    }
}
