use serde::{Deserialize, Serialize};

use crate::providers::TranscriptWord;
use crate::text::{normalize_token, tokens};
use crate::timeline::TimeSpan;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignParams {
    pub window_slack: usize,
    pub match_threshold: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            window_slack: 2,
            match_threshold: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignMatch {
    /// First transcript word of the window.
    pub start: usize,
    /// One past the last transcript word.
    pub end: usize,
    pub ratio: f64,
    pub span: TimeSpan,
}

/// `1 - lev / max(len)` over token sequences.
pub fn token_similarity(a: &[String], b: &[String]) -> f64 {
    let m = a.len().max(b.len());
    if m == 0 {
        return 1.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (m - prev[b.len()]) as f64 / m as f64
}

/// Best transcript window for `quote`, searched over every window whose
/// length is within `window_slack` of the quote's token count.
///
/// Ranking: highest similarity, then earliest start, then length closest to
/// the quote, then shorter.
pub fn align_quote(quote: &str, transcript: &[TranscriptWord], params: &AlignParams) -> Option<AlignMatch> {
    let q = tokens(quote);
    let n = q.len();
    if n == 0 {
        return None;
    }
    // words that normalize to nothing (pure punctuation) carry no token
    let idx: Vec<usize> = (0..transcript.len())
        .filter(|&i| !normalize_token(&transcript[i].text).is_empty())
        .collect();
    let t: Vec<String> = idx.iter().map(|&i| normalize_token(&transcript[i].text)).collect();
    let min_len = n.saturating_sub(params.window_slack).max(1);
    let max_len = n + params.window_slack;

    // (matched, max_len, start, len) of the best window so far
    let mut best: Option<(usize, usize, usize, usize)> = None;
    let better = |cand: (usize, usize, usize, usize), cur: (usize, usize, usize, usize)| -> bool {
        // compare matched/max exactly via cross multiplication
        let lhs = cand.0 * cur.1;
        let rhs = cur.0 * cand.1;
        if lhs != rhs {
            return lhs > rhs;
        }
        if cand.2 != cur.2 {
            return cand.2 < cur.2;
        }
        let dc = cand.3.abs_diff(n);
        let dr = cur.3.abs_diff(n);
        if dc != dr {
            return dc < dr;
        }
        cand.3 < cur.3
    };

    let mut col = vec![0usize; n + 1];
    for start in 0..t.len() {
        // edit distance of the quote against t[start..start+len] for every len
        // in one pass over the columns
        for (i, c) in col.iter_mut().enumerate() {
            *c = i;
        }
        let limit = max_len.min(t.len() - start);
        for len in 1..=limit {
            let y = &t[start + len - 1];
            let mut diag = col[0];
            col[0] = len;
            for i in 1..=n {
                let up = col[i];
                let sub = diag + usize::from(q[i - 1] != *y);
                col[i] = sub.min(up + 1).min(col[i - 1] + 1);
                diag = up;
            }
            if len >= min_len {
                let m = n.max(len);
                let cand = (m - col[n], m, start, len);
                if best.is_none_or(|b| better(cand, b)) {
                    best = Some(cand);
                }
            }
        }
    }

    let (matched, m, start, len) = best?;
    if (matched as f64) < params.match_threshold * m as f64 - 1e-9 {
        return None;
    }
    let first = idx[start];
    let last = idx[start + len - 1];
    let span = TimeSpan::new(transcript[first].span.start(), transcript[last].span.end()).ok()?;
    Some(AlignMatch {
        start: first,
        end: last + 1,
        ratio: matched as f64 / m as f64,
        span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transcript(text: &str) -> Vec<TranscriptWord> {
        text.split_whitespace()
            .enumerate()
            .map(|(i, w)| TranscriptWord {
                text: w.into(),
                span: TimeSpan::new(i as f64 * 0.5, i as f64 * 0.5 + 0.4).unwrap(),
                confidence: 1.0,
            })
            .collect()
    }

    #[test]
    fn exact_match_has_ratio_one() {
        let t = transcript("well then we came here for a reason and left");
        let m = align_quote("We came here for a reason.", &t, &AlignParams::default()).unwrap();
        assert_eq!((m.start, m.end), (2, 8));
        assert_eq!(m.ratio, 1.0);
        assert_eq!(m.span.start(), 1.0);
        assert!((m.span.end() - 3.9).abs() < 1e-12);
    }

    #[test]
    fn one_substitution_in_ten() {
        let t = transcript("so love is the one thing we are capable of seeing that goes");
        let quote = "Love is the one thing we are capable of perceiving that";
        // 11 tokens, one wrong
        let m = align_quote(quote, &t, &AlignParams::default()).unwrap();
        assert_eq!((m.start, m.end), (1, 12));
        assert!((m.ratio - 10.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn absent_quote_is_no_match() {
        let t = transcript("nothing in here resembles the line at all");
        assert!(align_quote("Stay with me until the stars burn out.", &t, &AlignParams::default()).is_none());
        assert!(align_quote("...", &t, &AlignParams::default()).is_none());
        assert!(align_quote("Stay.", &[], &AlignParams::default()).is_none());
    }

    #[test]
    fn punctuation_tokens_are_skipped() {
        let t = transcript("we came - here");
        let m = align_quote("we came here", &t, &AlignParams::default()).unwrap();
        assert_eq!((m.start, m.end, m.ratio), (0, 4, 1.0));
    }

    #[test]
    fn similarity_basics() {
        let s = |x: &str| tokens(x);
        assert_eq!(token_similarity(&s("a b c"), &s("a b c")), 1.0);
        assert_eq!(token_similarity(&s("a b c d"), &s("a x c d")), 0.75);
        assert_eq!(token_similarity(&s("a b"), &s("c d")), 0.0);
    }
}
