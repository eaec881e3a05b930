use std::fmt;

use serde::{Deserialize, Serialize};

use super::QuoteCandidate;
use crate::text::BannedWords;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    pub min_len: usize,
    pub max_len: usize,
    pub polarity_min: f64,
    pub shortlist_cap: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            min_len: 15,
            max_len: 120,
            polarity_min: 0.1,
            shortlist_cap: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiscardReason {
    TooShort,
    TooLong,
    Incomplete,
    WeakSentiment,
    BannedWord,
    OverCap,
    NotSelected,
    NoAudioMatch,
}

impl DiscardReason {
    pub fn code(self) -> &'static str {
        match self {
            DiscardReason::TooShort => "too-short",
            DiscardReason::TooLong => "too-long",
            DiscardReason::Incomplete => "incomplete",
            DiscardReason::WeakSentiment => "weak-sentiment",
            DiscardReason::BannedWord => "banned-word",
            DiscardReason::OverCap => "over-cap",
            DiscardReason::NotSelected => "not-selected",
            DiscardReason::NoAudioMatch => "no-audio-match",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discard {
    pub source_index: usize,
    pub reason: DiscardReason,
    pub text: String,
}

impl fmt::Display for Discard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.source_index, self.reason.code(), self.text)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub shortlist: Vec<QuoteCandidate>,
    pub discards: Vec<Discard>,
}

pub fn has_terminal_punctuation(text: &str) -> bool {
    let t = text.trim_end_matches(['"', '\'', ')']);
    t.ends_with(['.', '!', '?', '…'])
}

/// Hard filters, then the `shortlist_cap` shortest survivors (ties by
/// source index).
pub fn filter_candidates(candidates: &[QuoteCandidate], params: &FilterParams, banned: &BannedWords) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    let mut survivors = Vec::new();
    for c in candidates {
        let reason = if c.char_len < params.min_len {
            Some(DiscardReason::TooShort)
        } else if c.char_len > params.max_len {
            Some(DiscardReason::TooLong)
        } else if !has_terminal_punctuation(&c.text) {
            Some(DiscardReason::Incomplete)
        } else if banned.find(&c.text).is_some() {
            Some(DiscardReason::BannedWord)
        } else if c.polarity.abs() < params.polarity_min {
            Some(DiscardReason::WeakSentiment)
        } else {
            None
        };
        match reason {
            Some(reason) => out.discards.push(Discard {
                source_index: c.source_index,
                reason,
                text: c.text.clone(),
            }),
            None => survivors.push(c.clone()),
        }
    }
    survivors.sort_by_key(|c| (c.char_len, c.source_index));
    for c in survivors.drain(params.shortlist_cap.min(survivors.len())..) {
        out.discards.push(Discard {
            source_index: c.source_index,
            reason: DiscardReason::OverCap,
            text: c.text,
        });
    }
    out.shortlist = survivors;
    out
}
