use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metadata::MovieMetadata;
use crate::prompts;
use crate::providers::{Providers, Template};
use crate::report::Report;
use crate::text::parse_list;

const VOICE_MAP: &str = include_str!("../../resources/voice_map.toml");

/// `max(3, floor(trailer_s / 15))`.
pub fn n_phrases_for(trailer_s: f64) -> usize {
    ((trailer_s / 15.0).floor().max(0.0) as usize).max(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenreVoiceMap {
    pub priority: Vec<String>,
    pub default: String,
    #[serde(rename = "voices")]
    pub entries: BTreeMap<String, String>,
}

impl Default for GenreVoiceMap {
    fn default() -> Self {
        GenreVoiceMap::parse(VOICE_MAP).expect("bundled voice map parses")
    }
}

impl GenreVoiceMap {
    pub fn parse(text: &str) -> Result<GenreVoiceMap> {
        toml::from_str(text).map_err(|e| Error::Config(format!("voice map: {e}")))
    }

    pub fn load(path: &Path) -> Result<GenreVoiceMap> {
        GenreVoiceMap::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// The first priority genre the movie lists picks the voice.
pub fn pick_voice(genres: &[String], map: &GenreVoiceMap) -> String {
    map.priority
        .iter()
        .find(|p| genres.iter().any(|g| g.eq_ignore_ascii_case(p)))
        .and_then(|p| map.entries.get(p))
        .cloned()
        .unwrap_or_else(|| map.default.clone())
}

fn mentions(phrase: &str, needle: &str) -> bool {
    !needle.trim().is_empty() && phrase.to_lowercase().contains(&needle.to_lowercase())
}

/// Why a phrase list breaks the content rule, if it does.
fn content_problem(phrases: &[String], meta: &MovieMetadata) -> Option<String> {
    let director = phrases.iter().filter(|p| mentions(p, &meta.director)).count();
    let month = phrases.iter().filter(|p| mentions(p, meta.release_month())).count();
    match (director, month) {
        (1, 1) => None,
        (d, 1) => Some(format!("the director is named in {d} lines instead of one")),
        (1, m) => Some(format!("the release month appears in {m} lines instead of one")),
        (d, m) => Some(format!("director named in {d} lines and release month in {m}, each should be one")),
    }
}

/// Voice-over lines. A wrong count or a broken director/month rule earns one
/// reprompt; a second wrong count is fatal, a second content slip is
/// accepted with a warning.
pub fn generate_voiceover_phrases(
    providers: &Providers,
    meta: &MovieMetadata,
    n_phrases: usize,
    report: &mut Report,
) -> Result<Vec<String>> {
    if n_phrases == 0 {
        return Err(Error::InvalidInput("phrase count must be positive".into()));
    }
    let prompt = prompts::voiceover_phrases(meta, n_phrases);
    let phrases = parse_list(&providers.llm_complete(&prompt, Template::VoiceoverPhrases)?);
    let problem = if phrases.len() != n_phrases {
        Some(format!("it had {} lines", phrases.len()))
    } else {
        content_problem(&phrases, meta)
    };
    let Some(problem) = problem else { return Ok(phrases) };

    let retry = prompts::voiceover_retry(&prompt, n_phrases, &problem);
    let phrases = parse_list(&providers.llm_complete(&retry, Template::VoiceoverPhrases)?);
    if phrases.len() != n_phrases {
        return Err(Error::Parse {
            template: Template::VoiceoverPhrases.id().into(),
            reason: format!("expected {n_phrases} phrases, got {}", phrases.len()),
        });
    }
    if let Some(p) = content_problem(&phrases, meta) {
        report.warn("voiceover-content", p);
    }
    Ok(phrases)
}
