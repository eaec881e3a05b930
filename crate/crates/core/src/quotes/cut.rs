use super::AlignedQuote;
use crate::timeline::{Blanking, Clip, Shot};

/// Quote Clip over the aligned span. When the span crosses a cut and the
/// first or last shot covers less than `min_shot_s` of it, that part of the
/// picture is blanked; timing and audio are kept.
pub fn cut_quote_clip(aligned: &AlignedQuote, shots: &[Shot], min_shot_s: f64) -> Clip {
    let span = aligned.source_span;
    let mut clip = Clip::quote(span, aligned.quote.text.clone());
    let covered: Vec<f64> = shots
        .iter()
        .filter_map(|s| s.span.intersect(&span))
        .map(|i| i.duration())
        .filter(|&d| d > 0.0)
        .collect();
    if covered.len() >= 2 {
        let head = covered[0];
        let tail = covered[covered.len() - 1];
        clip.blank = Blanking {
            head_s: if head < min_shot_s { head } else { 0.0 },
            tail_s: if tail < min_shot_s { tail } else { 0.0 },
        };
    }
    clip
}
