use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::report::Report;
use crate::timeline::{TimeSpan, TIME_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedVoice {
    pub phrase: String,
    pub span: TimeSpan,
    /// Synthesized speech on disk.
    pub audio: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VoicePlan {
    pub phrases: Vec<String>,
    pub voice_id: String,
    pub clips: Vec<PlacedVoice>,
}

/// Greedy earliest fit, in phrase order. Each clip starts as early as it can
/// after the previous one while keeping `pad_s` from every quote span and
/// every placed clip; the trailer bounds need no pad. A clip that fits
/// nowhere is skipped. Returns the start time per clip.
pub fn place_voice_clips(
    lengths: &[f64],
    quote_spans: &[TimeSpan],
    trailer_s: f64,
    pad_s: f64,
    report: &mut Report,
) -> Vec<Option<TimeSpan>> {
    let mut obstacles: Vec<TimeSpan> = quote_spans.to_vec();
    let mut cursor = 0.0;
    let mut out = Vec::with_capacity(lengths.len());
    for (i, &d) in lengths.iter().enumerate() {
        let mut t = cursor;
        // each push moves t past an obstacle end, so this terminates
        loop {
            let clash = obstacles
                .iter()
                .filter(|o| t < o.end() + pad_s - TIME_EPS && t + d > o.start() - pad_s + TIME_EPS)
                .map(TimeSpan::end)
                .reduce(f64::max);
            match clash {
                Some(end) => t = end + pad_s,
                None => break,
            }
        }
        let placed = if d > 0.0 && t + d <= trailer_s + TIME_EPS {
            TimeSpan::new(t, t + d).ok()
        } else {
            None
        };
        match placed {
            Some(span) => {
                obstacles.push(span);
                cursor = span.end() + pad_s;
            }
            None => report.warn("voice-dropped", format!("voice clip {i} ({d:.2} s) does not fit")),
        }
        out.push(placed);
    }
    out
}
