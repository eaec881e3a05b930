//! Worked examples with a canned provider that answers with published
//! completions for Interstellar and The Return of the King.

use std::sync::Arc;

use chrono::NaiveDate;
use serde_json::json;

use trailer_core::assembly::{
    generate_music_description, generate_voiceover_phrases, interleave, missing_music_fields, pick_voice,
    GenreVoiceMap, Slot,
};
use trailer_core::metadata::MovieMetadata;
use trailer_core::prep::{plan_frame_samples, segment_plot, ProjectConfig};
use trailer_core::providers::{
    FixtureStore, ProviderBackend, ProviderError, ProviderKind, ProviderRequest, ProviderResponse, Providers,
    Recorder, Template,
};
use trailer_core::quotes::{clean_all, filter_candidates, FilterParams, Lexicon};
use trailer_core::text::BannedWords;
use trailer_core::Report;

const SUBPLOTS: [&str; 3] = [
    "A dusty farm under a fading sky.",
    "A father, Cooper, checks over crops with a knowing frown.",
    "Young Murphy stares at mysterious patterns in the dust.",
];

const QUOTES: [&str; 2] = [
    "Love is the one thing we're capable of perceiving that transcends time and space.",
    "We've always defined ourselves by the ability to overcome the impossible.",
];

const VOICEOVER: [&str; 3] = [
    "In the silence of space, hope whispers for a dying Earth.",
    "A ghost in the dust, a code to the stars under Christopher Nolan's vision.",
    "As hours become years, the journey for mankind's future unfolds in November.",
];

const MUSIC: &str = "Instruments: Cello, dulcimer, low woodwinds, brass ensemble.
Key: D minor.
Tempo: Moderate to slow.
Dynamics: Varied, with dynamic swells mirroring conflict.
Texture: Layered, introducing one instrument at a time.
Mood: Ominous with moments of somber reflection.
Atmosphere: Tense, foreboding.";

struct Canned;

impl ProviderBackend for Canned {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let template = req.template_id.as_deref().and_then(Template::from_id);
        let text = match template {
            Some(Template::PlotSegmentation) => SUBPLOTS.iter().map(|s| format!("- {s}")).collect::<Vec<_>>().join("\n"),
            Some(Template::VoiceoverPhrases) => {
                VOICEOVER.iter().enumerate().map(|(i, s)| format!("{}. {s}", i + 1)).collect::<Vec<_>>().join("\n")
            }
            Some(Template::MusicDescription) => MUSIC.to_string(),
            _ => return Ok(ProviderResponse::failure("unavailable: not canned")),
        };
        Ok(ProviderResponse::success(json!({ "text": text })))
    }
}

fn interstellar() -> MovieMetadata {
    MovieMetadata {
        imdb_id: "tt0816692".into(),
        title: "Interstellar".into(),
        synopsis: "A dusty farm under a fading sky. A father checks his crops. His daughter studies the dust.".into(),
        quotes_raw: QUOTES.iter().map(|q| format!("Brand: {q}")).collect(),
        genres: vec!["Adventure".into(), "Drama".into(), "Sci-Fi".into()],
        director: "Christopher Nolan".into(),
        release_date: NaiveDate::from_ymd_opt(2014, 11, 7).unwrap(),
    }
}

fn canned() -> Providers {
    let mut p = Providers::uniform(Arc::new(Canned));
    p.retry.max_retries = 0;
    p
}

#[test]
fn three_scene_interleave() {
    use Slot::*;
    assert_eq!(interleave(3, 2, &mut Report::new()), [Sc, Qc, Sc, Qc, Sc]);
}

#[test]
fn frames_every_nine_seconds() {
    let got = plan_frame_samples(600.0, &ProjectConfig::default(), &mut Report::new());
    assert!(got.windows(2).all(|w| w[1] - w[0] == 9.0));
}

#[test]
fn sub_plots_parse_from_the_published_list() {
    let got = segment_plot(&canned(), &interstellar().synopsis, 3).unwrap();
    let texts: Vec<&str> = got.iter().map(|s| s.text.as_str()).collect();
    assert_eq!(texts, SUBPLOTS);
}

#[test]
fn published_quotes_survive_the_hard_filters() {
    let cands = clean_all(&interstellar().quotes_raw, &Lexicon::default());
    assert_eq!(cands.len(), 2);
    assert!(cands.iter().all(|c| c.speaker.as_deref() == Some("Brand")));
    let out = filter_candidates(&cands, &FilterParams::default(), &BannedWords::default());
    let kept: Vec<&str> = out.shortlist.iter().map(|c| c.text.as_str()).collect();
    assert_eq!(kept.len(), 2, "discards: {:?}", out.discards);
    // shortest first
    assert_eq!(kept, [QUOTES[1], QUOTES[0]]);
}

#[test]
fn published_voiceover_meets_the_content_rule() {
    let mut report = Report::new();
    let got = generate_voiceover_phrases(&canned(), &interstellar(), 3, &mut report).unwrap();
    assert_eq!(got, VOICEOVER);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    assert_eq!(pick_voice(&interstellar().genres, &GenreVoiceMap::default()), "narrator-cosmic");
}

#[test]
fn published_music_description_has_all_fields() {
    assert!(missing_music_fields(MUSIC).is_empty());
    let mut report = Report::new();
    let got = generate_music_description(&canned(), &interstellar(), &mut report).unwrap();
    assert_eq!(got, MUSIC);
    assert!(report.warnings.is_empty());
}

#[test]
fn recorded_answers_replay_identically() {
    let dir = tempfile::tempdir().unwrap();
    let store = FixtureStore::new(dir.path());
    let recorder = Providers::uniform(Arc::new(Recorder::new(Arc::new(Canned), store.clone())));
    let live = segment_plot(&recorder, &interstellar().synopsis, 3).unwrap();
    let replay = segment_plot(&Providers::uniform(Arc::new(store)), &interstellar().synopsis, 3).unwrap();
    assert_eq!(live, replay);
    assert_eq!(std::fs::read_dir(dir.path().join(ProviderKind::Llm.as_str())).unwrap().count(), 1);
}
