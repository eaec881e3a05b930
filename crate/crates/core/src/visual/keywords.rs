use crate::error::Result;
use crate::prep::SubPlot;
use crate::prompts;
use crate::providers::{Providers, Template};
use crate::report::Report;
use crate::text::{content_words, parse_keywords};

pub const KEYWORD_COUNT: usize = 5;

fn push_distinct(into: &mut Vec<String>, items: impl IntoIterator<Item = String>) {
    for k in items {
        if into.len() == KEYWORD_COUNT {
            return;
        }
        if !k.is_empty() && !into.contains(&k) {
            into.push(k);
        }
    }
}

/// The longest content words of `text`, earlier first on equal length.
pub fn fallback_keywords(text: &str) -> Vec<String> {
    let mut words = content_words(text);
    // stable sort keeps first-occurrence order among equal lengths
    words.sort_by_key(|w| std::cmp::Reverse(w.chars().count()));
    words.truncate(KEYWORD_COUNT);
    words
}

/// Five distinct lowercase keywords for a sub-plot. A short answer earns one
/// reprompt; anything still missing is filled from the sub-plot's own words.
pub fn extract_keywords(providers: &Providers, subplot: &SubPlot, report: &mut Report) -> Result<Vec<String>> {
    let prompt = prompts::keyword_extraction(&subplot.text);
    let mut keywords = Vec::new();
    push_distinct(&mut keywords, parse_keywords(&providers.llm_complete(&prompt, Template::KeywordExtraction)?));
    if keywords.len() < KEYWORD_COUNT {
        let retry = prompts::keyword_extraction_retry(&prompt, keywords.len());
        push_distinct(&mut keywords, parse_keywords(&providers.llm_complete(&retry, Template::KeywordExtraction)?));
    }
    if keywords.len() < KEYWORD_COUNT {
        report.warn(
            "keyword-fallback",
            format!("sub-plot {}: padded {} keywords from its text", subplot.index, KEYWORD_COUNT - keywords.len()),
        );
        push_distinct(&mut keywords, fallback_keywords(&subplot.text));
    }
    if keywords.len() < KEYWORD_COUNT {
        report.warn(
            "few-keywords",
            format!("sub-plot {} yields only {} keywords", subplot.index, keywords.len()),
        );
    }
    Ok(keywords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fallback_prefers_long_words() {
        assert_eq!(
            fallback_keywords("Young Murphy stares at mysterious patterns in the dust."),
            ["mysterious", "patterns", "murphy", "stares", "young"]
        );
    }

    #[test]
    fn distinct_and_capped() {
        let mut k = Vec::new();
        push_distinct(&mut k, ["farm", "farm", "sky", "", "dust"].map(String::from));
        assert_eq!(k, ["farm", "sky", "dust"]);
        push_distinct(&mut k, ["a", "b", "c", "d"].map(String::from));
        assert_eq!(k.len(), KEYWORD_COUNT);
    }
}
