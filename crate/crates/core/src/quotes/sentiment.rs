use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::words;

const LEXICON: &str = include_str!("../../resources/sentiment_lexicon.tsv");

/// Word to polarity table.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::parse(LEXICON).expect("bundled lexicon parses")
    }
}

impl Lexicon {
    /// Tab separated `word<TAB>polarity`; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Lexicon> {
        let mut entries = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("lexicon line {}: expected a tab", n + 1)))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("lexicon line {}: bad polarity {value:?}", n + 1)))?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("lexicon line {}: polarity {v} outside [-1, 1]", n + 1)));
            }
            entries.insert(word.trim().to_lowercase(), v);
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Lexicon> {
        Lexicon::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_negator(w: &str) -> bool {
    matches!(w, "not" | "no" | "never" | "nothing" | "cannot") || w.ends_with("n't")
}

/// Mean polarity of lexicon words, with a word's sign flipped when the word
/// right before it is a negator. Zero when nothing matches.
pub fn polarity(text: &str, lexicon: &Lexicon) -> f64 {
    let ws = words(text);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, w) in ws.iter().enumerate() {
        if let Some(v) = lexicon.get(w) {
            let negated = i > 0 && is_negator(&ws[i - 1]);
            sum += if negated { -v } else { v };
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).clamp(-1.0, 1.0)
    }
}
