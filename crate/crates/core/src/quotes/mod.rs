//! Quote funnel: clean, filter, LLM selection, alignment to the movie
//! audio, VAD refinement and Quote Clip cutting.

mod align;
mod clean;
mod cut;
mod filter;
mod refine;
mod select;
mod sentiment;

pub use align::{align_quote, token_similarity, AlignMatch, AlignParams};
pub use clean::{clean_all, clean_quote};
pub use cut::cut_quote_clip;
pub use filter::{filter_candidates, has_terminal_punctuation, Discard, DiscardReason, FilterOutcome, FilterParams};
pub use refine::refine_with_vad;
pub use select::select_quotes_llm;
pub use sentiment::{polarity, Lexicon};

use serde::{Deserialize, Serialize};

use crate::timeline::TimeSpan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteCandidate {
    pub speaker: Option<String>,
    pub text: String,
    pub char_len: usize,
    pub polarity: f64,
    /// Position among all cleaned utterances of the movie.
    pub source_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedQuote {
    pub quote: QuoteCandidate,
    pub source_span: TimeSpan,
    pub match_ratio: f64,
    pub refined: bool,
}

/// Tunables for the whole funnel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuoteParams {
    #[serde(flatten)]
    pub filter: FilterParams,
    #[serde(flatten)]
    pub align: AlignParams,
    pub vad_pad_s: f64,
    pub min_shot_s: f64,
    /// Shot detection around a quote looks this far beyond its span.
    pub sbd_margin_s: f64,
    /// Overrides the count derived from the scene count.
    pub n_quotes: Option<usize>,
}

impl Default for QuoteParams {
    fn default() -> Self {
        QuoteParams {
            filter: FilterParams::default(),
            align: AlignParams::default(),
            vad_pad_s: 0.25,
            min_shot_s: 0.5,
            sbd_margin_s: 1.0,
            n_quotes: None,
        }
    }
}

/// `max(2, round(scene_count / 5))`.
pub fn n_quotes_for(scene_count: usize) -> usize {
    ((scene_count as f64 / 5.0).round() as usize).max(2)
}
