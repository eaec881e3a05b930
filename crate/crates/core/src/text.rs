//! Text utilities shared by the stages: tokenization, the banned-word list,
//! stopwords and parsing of list-shaped LLM completions.

use std::sync::OnceLock;

use regex::Regex;

const BANNED_WORDS: &str = include_str!("../resources/banned_words.txt");

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just",
    "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own", "same", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
];

pub fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}

/// Lowercases and keeps only alphanumerics: `"We're,"` becomes `"were"`.
pub fn normalize_token(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Whitespace tokens, normalized, empties dropped.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Lowercase word tokens keeping inner apostrophes (`don't`), used where
/// contractions matter.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '’'))
        .map(|w| w.trim_matches(|c| c == '\'' || c == '’').replace('’', "'").to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Content words of `text`: stopwords and non-alphabetic tokens removed,
/// first occurrence order.
pub fn content_words(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for w in tokens(text) {
        if w.len() > 1 && w.chars().all(char::is_alphabetic) && !is_stopword(&w) && !out.contains(&w) {
            out.push(w);
        }
    }
    out
}

pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Straightens typographic quotes and dashes.
pub fn normalize_quotes(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '‘' | '’' | '′' => '\'',
            '“' | '”' | '″' => '"',
            '–' | '—' => '-',
            other => other,
        })
        .collect()
}

/// Case-insensitive stem list: a word is banned when it starts with a stem.
#[derive(Debug, Clone)]
pub struct BannedWords {
    stems: Vec<String>,
}

impl Default for BannedWords {
    fn default() -> Self {
        BannedWords::parse(BANNED_WORDS)
    }
}

impl BannedWords {
    pub fn parse(text: &str) -> BannedWords {
        BannedWords {
            stems: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<BannedWords> {
        Ok(BannedWords::parse(&std::fs::read_to_string(path)?))
    }

    pub fn is_banned(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.stems.iter().any(|s| w.starts_with(s.as_str()))
    }

    /// First banned word in `text`, if any.
    pub fn find(&self, text: &str) -> Option<String> {
        words(text).into_iter().find(|w| self.is_banned(w))
    }

    /// Removes banned words from `text`, keeping the rest of each sentence.
    pub fn scrub(&self, text: &str) -> String {
        static WORD: OnceLock<Regex> = OnceLock::new();
        let re = WORD.get_or_init(|| Regex::new(r"[\p{L}\p{N}][\p{L}\p{N}'’]*").unwrap());
        let removed = re.replace_all(text, |caps: &regex::Captures<'_>| {
            if self.is_banned(&caps[0]) {
                String::new()
            } else {
                caps[0].to_string()
            }
        });
        static SPACE_PUNCT: OnceLock<Regex> = OnceLock::new();
        let sp = SPACE_PUNCT.get_or_init(|| Regex::new(r"\s+([,.;:!?])").unwrap());
        let lines: Vec<String> = removed
            .lines()
            .map(|l| sp.replace_all(&collapse_whitespace(l), "$1").into_owned())
            .collect();
        lines.join("\n").trim().to_string()
    }
}

/// Splits a list-shaped completion into items: one per line, bullets and
/// numbering stripped, surrounding quotes removed, blank lines skipped.
pub fn parse_list(completion: &str) -> Vec<String> {
    static MARKER: OnceLock<Regex> = OnceLock::new();
    let marker = MARKER
        .get_or_init(|| Regex::new(r"^\s*(?:[-*•]+\s*|\(?\d{1,3}\s*[.):]\s*|\d{1,3}\s+-\s+)").unwrap());
    completion
        .lines()
        .map(|line| {
            let line = marker.replace(line, "");
            strip_wrapping_quotes(line.trim()).trim().to_string()
        })
        .filter(|l| !l.is_empty())
        .collect()
}

fn strip_wrapping_quotes(s: &str) -> &str {
    let pairs = [('"', '"'), ('“', '”'), ('\'', '\''), ('`', '`')];
    for (open, close) in pairs {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            return &s[open.len_utf8()..s.len() - close.len_utf8()];
        }
    }
    s
}

/// Keyword completions come either one per line or comma separated.
pub fn parse_keywords(completion: &str) -> Vec<String> {
    let items = parse_list(completion);
    let flat: Vec<String> = if items.len() == 1 {
        items[0].split([',', ';']).map(str::to_string).collect()
    } else {
        items
    };
    flat.into_iter()
        .map(|k| collapse_whitespace(&k.trim_end_matches('.').to_lowercase()))
        .filter(|k| !k.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_drop_punctuation_and_case() {
        assert_eq!(tokens("We're here,  FOR a reason!"), ["were", "here", "for", "a", "reason"]);
        assert!(tokens(" ... ").is_empty());
    }

    #[test]
    fn banned_stems_match_inflections() {
        let b = BannedWords::parse("kill\n# comment\nblood\n");
        assert!(b.is_banned("Killers"));
        assert!(!b.is_banned("skill"));
        assert_eq!(b.find("The bloodied coat."), Some("bloodied".into()));
        assert_eq!(b.find("A quiet coat."), None);
    }

    #[test]
    fn scrub_removes_words_and_tidies_spacing() {
        let b = BannedWords::parse("kill\n");
        assert_eq!(b.scrub("They kill the lights , then leave."), "They the lights, then leave.");
        assert_eq!(b.scrub("A  man  walks killing."), "A man walks.");
    }

    #[test]
    fn shipped_list_is_nonempty() {
        let b = BannedWords::default();
        assert!(b.is_banned("murderer"));
        assert!(!b.is_banned("farm"));
    }

    #[test]
    fn list_parsing_strips_markers() {
        let got = parse_list("1. First one.\n2) \"Second.\"\n\n- third\n* fourth\n10. tenth");
        assert_eq!(got, ["First one.", "Second.", "third", "fourth", "tenth"]);
        // numbers that belong to the sentence survive
        assert_eq!(parse_list("2001 was a year."), ["2001 was a year."]);
    }

    #[test]
    fn keyword_parsing_accepts_both_shapes() {
        assert_eq!(parse_keywords("Farm, sky, Dust."), ["farm", "sky", "dust"]);
        assert_eq!(parse_keywords("1. Farm\n2. Fading sky"), ["farm", "fading sky"]);
    }

    #[test]
    fn content_words_skip_stopwords() {
        assert_eq!(content_words("A dusty farm under a fading sky."), ["dusty", "farm", "fading", "sky"]);
    }
}
