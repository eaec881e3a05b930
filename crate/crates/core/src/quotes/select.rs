use super::QuoteCandidate;
use crate::error::Result;
use crate::metadata::MovieMetadata;
use crate::prompts;
use crate::providers::{ProviderError, Providers, Template};
use crate::report::Report;
use crate::text::{collapse_whitespace, normalize_quotes, parse_list};

fn key(text: &str) -> String {
    collapse_whitespace(&normalize_quotes(text))
}

/// LLM ranking of the shortlist. Lines that do not match a shortlist entry
/// verbatim are dropped and the next one promoted.
pub fn select_quotes_llm(
    providers: &Providers,
    shortlist: &[QuoteCandidate],
    n_quotes: usize,
    meta: &MovieMetadata,
    report: &mut Report,
) -> Result<Vec<QuoteCandidate>> {
    if n_quotes == 0 {
        return Ok(Vec::new());
    }
    if shortlist.is_empty() {
        report.warn("empty-shortlist", "no quote survived filtering");
        return Ok(Vec::new());
    }
    let texts: Vec<String> = shortlist.iter().map(|c| c.text.clone()).collect();
    let prompt = prompts::quote_selection(&texts, n_quotes, meta);
    let completion = match providers.llm_complete(&prompt, Template::QuoteSelection) {
        Ok(c) => c,
        Err(ProviderError::ContentFilter { .. }) => {
            report.warn("quote-content-filter", "quote selection refused by the content filter");
            return Ok(Vec::new());
        }
        Err(e) => return Err(e.into()),
    };

    let mut chosen: Vec<QuoteCandidate> = Vec::new();
    for line in parse_list(&completion) {
        if chosen.len() == n_quotes {
            break;
        }
        let k = key(&line);
        match shortlist.iter().find(|c| key(&c.text) == k) {
            Some(c) if chosen.iter().any(|q| q.source_index == c.source_index) => {}
            Some(c) => chosen.push(c.clone()),
            None => report.warn("quote-not-in-shortlist", format!("dropped unknown line {line:?}")),
        }
    }
    if chosen.len() < n_quotes {
        report.warn(
            "few-quotes-selected",
            format!("wanted {n_quotes} quotes, kept {}", chosen.len()),
        );
    }
    Ok(chosen)
}
