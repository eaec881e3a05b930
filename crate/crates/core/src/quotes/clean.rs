use std::sync::OnceLock;

use regex::Regex;

use super::sentiment::{polarity, Lexicon};
use super::QuoteCandidate;
use crate::text::{collapse_whitespace, normalize_quotes};

fn speaker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?:^|[.!?…]["']?\s+)([A-Z][\p{L}'\-]*(?:\s[A-Z][\p{L}'\-]*){0,3}):\s"#).unwrap()
    })
}

fn direction_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[[^\]]*\]|\([^)]*\)").unwrap())
}

fn tidy(text: &str) -> String {
    static SPACE_PUNCT: OnceLock<Regex> = OnceLock::new();
    let sp = SPACE_PUNCT.get_or_init(|| Regex::new(r"\s+([,.;:!?…])").unwrap());
    let t = collapse_whitespace(text);
    sp.replace_all(&t, "$1")
        .trim_matches(|c: char| c.is_whitespace() || c == '-' || c == ':')
        .to_string()
}

/// Splits one raw quote entry into utterances. Source indices start at 0;
/// [`clean_all`] renumbers them across a whole quote list.
pub fn clean_quote(raw: &str, lexicon: &Lexicon) -> Vec<QuoteCandidate> {
    let text = normalize_quotes(raw);
    let text = direction_re().replace_all(&text, " ");
    let text = collapse_whitespace(&text);
    if text.is_empty() {
        return Vec::new();
    }

    // (speaker, body start, body end)
    let mut parts: Vec<(Option<String>, usize, usize)> = Vec::new();
    let mut cursor = 0;
    let mut speaker: Option<String> = None;
    for caps in speaker_re().captures_iter(&text) {
        let name = caps.get(1).expect("group 1");
        let whole = caps.get(0).expect("group 0");
        // the utterance before this label ends where the label starts
        parts.push((speaker.take(), cursor, name.start()));
        speaker = Some(name.as_str().to_string());
        cursor = whole.end();
    }
    parts.push((speaker, cursor, text.len()));

    parts
        .into_iter()
        .filter_map(|(speaker, a, b)| {
            let body = tidy(&text[a..b]);
            if !body.chars().any(char::is_alphanumeric) {
                return None;
            }
            Some(QuoteCandidate {
                speaker,
                char_len: body.chars().count(),
                polarity: polarity(&body, lexicon),
                text: body,
                source_index: 0,
            })
        })
        .enumerate()
        .map(|(i, mut c)| {
            c.source_index = i;
            c
        })
        .collect()
}

/// Cleans every raw entry, numbering utterances in list order.
pub fn clean_all(raw: &[String], lexicon: &Lexicon) -> Vec<QuoteCandidate> {
    let mut out = Vec::new();
    for r in raw {
        for mut c in clean_quote(r, lexicon) {
            c.source_index = out.len();
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(raw: &str) -> Vec<QuoteCandidate> {
        clean_quote(raw, &Lexicon::default())
    }

    #[test]
    fn speaker_prefix_is_split_off() {
        let c = clean("Cooper: Love is the one thing we're capable of perceiving that transcends time and space.");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].speaker.as_deref(), Some("Cooper"));
        assert_eq!(
            c[0].text,
            "Love is the one thing we're capable of perceiving that transcends time and space."
        );
        assert_eq!(c[0].char_len, c[0].text.chars().count());
    }

    #[test]
    fn stage_directions_go() {
        let c = clean("[sighs] Fine.");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].text, "Fine.");
        assert_eq!(c[0].speaker, None);
        assert_eq!(clean("Mara: (quietly) Go on .")[0].text, "Go on.");
    }

    #[test]
    fn exchanges_split_per_utterance() {
        let c = clean("A: Hi. B: Hello.");
        let got: Vec<_> = c.iter().map(|c| (c.speaker.as_deref(), c.text.as_str())).collect();
        assert_eq!(got, [(Some("A"), "Hi."), (Some("B"), "Hello.")]);
        assert_eq!(c[1].source_index, 1);
    }

    #[test]
    fn multiword_speaker_names() {
        let c = clean("Professor Brand: Do not go gentle into that good night.");
        assert_eq!(c[0].speaker.as_deref(), Some("Professor Brand"));
    }

    #[test]
    fn colon_inside_a_sentence_is_not_a_speaker() {
        let c = clean("There is one rule: never look back.");
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].text, "There is one rule: never look back.");
    }

    #[test]
    fn nothing_left_after_cleaning() {
        assert!(clean("[music]").is_empty());
        assert!(clean("   ").is_empty());
    }

    #[test]
    fn numbering_runs_across_entries() {
        let raw = vec!["A: One. B: Two.".to_string(), "Three.".to_string()];
        let all = clean_all(&raw, &Lexicon::default());
        assert_eq!(all.iter().map(|c| c.source_index).collect::<Vec<_>>(), [0, 1, 2]);
    }
}
