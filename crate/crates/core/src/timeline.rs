//! Timeline data model shared by every stage: spans, shots, clips, the
//! assembled trailer timeline and the timestamp log written next to it.
//!
//! Times are real-valued seconds everywhere in this module. Quantization to
//! frame or sample boundaries happens only when rendering.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contiguity tolerance for spans computed by repeated addition.
pub const TIME_EPS: f64 = 1e-9;

/// Half-open interval `[start, end)` in seconds with `end > start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpan", into = "RawSpan")]
pub struct TimeSpan {
    start_s: f64,
    end_s: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSpan {
    start_s: f64,
    end_s: f64,
}

impl TryFrom<RawSpan> for TimeSpan {
    type Error = Error;

    fn try_from(raw: RawSpan) -> Result<Self> {
        TimeSpan::new(raw.start_s, raw.end_s)
    }
}

impl From<TimeSpan> for RawSpan {
    fn from(span: TimeSpan) -> Self {
        RawSpan {
            start_s: span.start_s,
            end_s: span.end_s,
        }
    }
}

impl TimeSpan {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !start_s.is_finite() || !end_s.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite span [{start_s}, {end_s}]"
            )));
        }
        if start_s < 0.0 {
            return Err(Error::InvalidInput(format!(
                "span starts before zero: {start_s}"
            )));
        }
        if end_s <= start_s {
            return Err(Error::InvalidInput(format!(
                "span end {end_s} is not after start {start_s}"
            )));
        }
        Ok(TimeSpan { start_s, end_s })
    }

    /// Span of `duration_s` seconds starting at `start_s`.
    pub fn starting_at(start_s: f64, duration_s: f64) -> Result<Self> {
        TimeSpan::new(start_s, start_s + duration_s)
    }

    pub fn start(&self) -> f64 {
        self.start_s
    }

    pub fn end(&self) -> f64 {
        self.end_s
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }

    /// True when the open interiors intersect.
    pub fn overlaps(&self, other: &TimeSpan) -> bool {
        self.start_s < other.end_s && other.start_s < self.end_s
    }

    pub fn intersect(&self, other: &TimeSpan) -> Option<TimeSpan> {
        TimeSpan::new(self.start_s.max(other.start_s), self.end_s.min(other.end_s)).ok()
    }

    /// Smallest distance between the two spans; zero when they overlap or touch.
    pub fn gap_to(&self, other: &TimeSpan) -> f64 {
        if self.overlaps(other) {
            0.0
        } else if self.end_s <= other.start_s {
            other.start_s - self.end_s
        } else {
            self.start_s - other.end_s
        }
    }

    pub fn shifted(&self, offset_s: f64) -> Result<TimeSpan> {
        TimeSpan::new(self.start_s + offset_s, self.end_s + offset_s)
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.3}, {:.3}]", self.start_s, self.end_s)
    }
}

/// A maximal run of frames between two cuts, in source-video time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub span: TimeSpan,
    pub first_frame_idx: usize,
    pub last_frame_idx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    Standard,
    Quote,
    Voice,
    Black,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AudioPolicy {
    Full,
    VocalsOnly,
    Muted,
    VoiceOnly,
}

/// Leading and trailing portions of a clip whose picture is replaced by
/// black while the source timing (and any audio) carries on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Blanking {
    pub head_s: f64,
    pub tail_s: f64,
}

impl Blanking {
    pub fn is_empty(&self) -> bool {
        self.head_s <= 0.0 && self.tail_s <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub kind: ClipKind,
    /// Source-video interval. Absent for Voice and Black clips.
    pub source_span: Option<TimeSpan>,
    /// Length on the trailer timeline.
    pub length_s: f64,
    /// Assigned when the clip is placed on a timeline.
    pub trailer_span: Option<TimeSpan>,
    pub audio_policy: AudioPolicy,
    /// Quote text or voice-over phrase; empty for Standard and Black.
    pub label: String,
    #[serde(default, skip_serializing_if = "Blanking::is_empty")]
    pub blank: Blanking,
    /// Sub-plot a Standard clip was retrieved for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subplot: Option<usize>,
}

impl Clip {
    pub fn standard(source_span: TimeSpan, subplot: usize) -> Clip {
        Clip {
            kind: ClipKind::Standard,
            length_s: source_span.duration(),
            source_span: Some(source_span),
            trailer_span: None,
            audio_policy: AudioPolicy::Muted,
            label: String::new(),
            blank: Blanking::default(),
            subplot: Some(subplot),
        }
    }

    pub fn quote(source_span: TimeSpan, label: impl Into<String>) -> Clip {
        Clip {
            kind: ClipKind::Quote,
            length_s: source_span.duration(),
            source_span: Some(source_span),
            trailer_span: None,
            audio_policy: AudioPolicy::VocalsOnly,
            label: label.into(),
            blank: Blanking::default(),
            subplot: None,
        }
    }

    pub fn black(length_s: f64) -> Clip {
        Clip {
            kind: ClipKind::Black,
            source_span: None,
            length_s,
            trailer_span: None,
            audio_policy: AudioPolicy::Muted,
            label: String::new(),
            blank: Blanking::default(),
            subplot: None,
        }
    }

    pub fn voice(length_s: f64, phrase: impl Into<String>) -> Clip {
        Clip {
            kind: ClipKind::Voice,
            source_span: None,
            length_s,
            trailer_span: None,
            audio_policy: AudioPolicy::VoiceOnly,
            label: phrase.into(),
            blank: Blanking::default(),
            subplot: None,
        }
    }

    /// Checks the per-clip invariants; returns the reason on failure.
    pub fn check(&self) -> std::result::Result<(), String> {
        if !(self.length_s.is_finite() && self.length_s > 0.0) {
            return Err(format!("non-positive length {}", self.length_s));
        }
        match self.kind {
            ClipKind::Quote if self.audio_policy != AudioPolicy::VocalsOnly => {
                return Err("quote clip must keep vocals only".into())
            }
            ClipKind::Standard if self.audio_policy != AudioPolicy::Muted => {
                return Err("standard clip must be muted".into())
            }
            ClipKind::Black | ClipKind::Voice if self.source_span.is_some() => {
                return Err("black/voice clip must not reference the source".into())
            }
            ClipKind::Standard | ClipKind::Quote if self.source_span.is_none() => {
                return Err("standard/quote clip needs a source span".into())
            }
            _ => {}
        }
        if let Some(src) = self.source_span {
            if (src.duration() - self.length_s).abs() > TIME_EPS * 1e3 {
                return Err("length differs from source span".into());
            }
        }
        if self.blank.head_s < 0.0
            || self.blank.tail_s < 0.0
            || self.blank.head_s + self.blank.tail_s > self.length_s + TIME_EPS
        {
            return Err("blanking exceeds clip length".into());
        }
        Ok(())
    }
}

/// Ordered clip sequence with contiguous trailer spans starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrailerTimeline {
    pub clips: Vec<Clip>,
    pub total_duration_s: f64,
}

impl TrailerTimeline {
    /// Lays `clips` end to end from zero, assigning each trailer span.
    pub fn assemble(clips: Vec<Clip>) -> Result<TrailerTimeline> {
        let mut cursor = 0.0;
        let mut placed = Vec::with_capacity(clips.len());
        for mut clip in clips {
            let span = TimeSpan::new(cursor, cursor + clip.length_s)?;
            cursor = span.end();
            clip.trailer_span = Some(span);
            placed.push(clip);
        }
        Ok(TrailerTimeline {
            clips: placed,
            total_duration_s: cursor,
        })
    }

    pub fn quote_count(&self) -> usize {
        self.clips
            .iter()
            .filter(|c| c.kind == ClipKind::Quote)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimelineViolation {
    Empty,
    MissingTrailerSpan { index: usize },
    NotStartingAtZero,
    GapOrOverlap { index: usize },
    LengthMismatch { index: usize },
    Clip { index: usize, reason: String },
    TotalMismatch { expected: f64, found: f64 },
}

impl fmt::Display for TimelineViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimelineViolation::Empty => f.write_str("empty timeline"),
            TimelineViolation::MissingTrailerSpan { index } => {
                write!(f, "missing trailer span at index {index}")
            }
            TimelineViolation::NotStartingAtZero => f.write_str("timeline does not start at 0"),
            TimelineViolation::GapOrOverlap { index } => write!(f, "gap/overlap at index {index}"),
            TimelineViolation::LengthMismatch { index } => {
                write!(f, "trailer span length mismatch at index {index}")
            }
            TimelineViolation::Clip { index, reason } => {
                write!(f, "clip invariant at index {index}: {reason}")
            }
            TimelineViolation::TotalMismatch { expected, found } => {
                write!(f, "total duration {found} differs from last clip end {expected}")
            }
        }
    }
}

/// Returns the first violated timeline invariant, if any.
pub fn validate_timeline(timeline: &TrailerTimeline) -> std::result::Result<(), TimelineViolation> {
    if timeline.clips.is_empty() {
        return Err(TimelineViolation::Empty);
    }
    let mut prev_end: Option<f64> = None;
    for (index, clip) in timeline.clips.iter().enumerate() {
        clip.check()
            .map_err(|reason| TimelineViolation::Clip { index, reason })?;
        let span = clip
            .trailer_span
            .ok_or(TimelineViolation::MissingTrailerSpan { index })?;
        match prev_end {
            None if span.start().abs() > TIME_EPS => return Err(TimelineViolation::NotStartingAtZero),
            Some(end) if (span.start() - end).abs() > TIME_EPS => {
                return Err(TimelineViolation::GapOrOverlap { index })
            }
            _ => {}
        }
        if (span.duration() - clip.length_s).abs() > 1e-6 {
            return Err(TimelineViolation::LengthMismatch { index });
        }
        prev_end = Some(span.end());
    }
    let last = prev_end.unwrap_or(0.0);
    if (timeline.total_duration_s - last).abs() > TIME_EPS {
        return Err(TimelineViolation::TotalMismatch {
            expected: last,
            found: timeline.total_duration_s,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogKind {
    Quote,
    Voice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub kind: LogKind,
    pub start_s: f64,
    pub end_s: f64,
    pub label: String,
}

impl LogEntry {
    pub fn span(&self) -> Result<TimeSpan> {
        TimeSpan::new(self.start_s, self.end_s)
    }
}

/// Start/end record of every Quote and Voice clip in trailer time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimestampLog {
    pub entries: Vec<LogEntry>,
}

impl TimestampLog {
    pub fn quotes(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter().filter(|e| e.kind == LogKind::Quote)
    }

    pub fn voices(&self) -> impl Iterator<Item = &LogEntry> {
        self.entries.iter().filter(|e| e.kind == LogKind::Voice)
    }

    /// Adds entries and restores ascending start order (stable).
    pub fn extend(&mut self, entries: impl IntoIterator<Item = LogEntry>) {
        self.entries.extend(entries);
        self.entries
            .sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    }

    pub fn to_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<TimestampLog> {
        let log: TimestampLog = serde_json::from_str(text)?;
        if log
            .entries
            .windows(2)
            .any(|w| w[1].start_s < w[0].start_s)
        {
            return Err(Error::InvalidInput("timestamp log is not sorted".into()));
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<TimestampLog> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TimestampLog::from_json(&text)
    }
}

/// Projects the Quote clips of a timeline into a log, trailer spans copied exactly.
pub fn log_from_timeline(timeline: &TrailerTimeline) -> TimestampLog {
    let mut log = TimestampLog::default();
    log.extend(timeline.clips.iter().filter_map(|clip| {
        let span = clip.trailer_span?;
        let kind = match clip.kind {
            ClipKind::Quote => LogKind::Quote,
            ClipKind::Voice => LogKind::Voice,
            _ => return None,
        };
        Some(LogEntry {
            kind,
            start_s: span.start(),
            end_s: span.end(),
            label: clip.label.clone(),
        })
    }));
    log
}
