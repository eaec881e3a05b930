use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use serde_json::json;

use super::*;

/// Backend answering from a closure, counting calls.
struct Canned<F> {
    f: F,
    calls: AtomicU32,
}

impl<F> Canned<F>
where
    F: Fn(&ProviderRequest, u32) -> Result<ProviderResponse, ProviderError> + Send + Sync,
{
    fn new(f: F) -> Arc<Self> {
        Arc::new(Canned {
            f,
            calls: AtomicU32::new(0),
        })
    }
}

impl<F> ProviderBackend for Canned<F>
where
    F: Fn(&ProviderRequest, u32) -> Result<ProviderResponse, ProviderError> + Send + Sync,
{
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(req, n)
    }
}

fn fast(backend: Arc<dyn ProviderBackend>) -> Providers {
    let mut p = Providers::uniform(backend);
    p.retry.backoff_base_ms = 0;
    p.embedding_dim = 3;
    p
}

#[test]
fn transient_failures_are_retried_then_succeed() {
    let b = Canned::new(|_, n| {
        if n < 2 {
            Ok(ProviderResponse::failure("unavailable: warming up"))
        } else {
            Ok(ProviderResponse::success(json!({"text": "ok"})))
        }
    });
    let p = fast(b.clone());
    assert_eq!(p.llm_complete("hi", Template::MusicDescription).unwrap(), "ok");
    assert_eq!(b.calls.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_stop_after_the_configured_count() {
    let b = Canned::new(|req, _| {
        Err(ProviderError::Transport {
            kind: req.kind,
            message: "connection reset".into(),
        })
    });
    let p = fast(b.clone());
    let err = p.llm_complete("hi", Template::PlotSegmentation).unwrap_err();
    assert!(matches!(err, ProviderError::RetriesExhausted { attempts: 4, .. }), "{err}");
    assert_eq!(b.calls.load(Ordering::SeqCst), 4);
}

#[test]
fn backoff_doubles() {
    let r = RetryPolicy {
        max_retries: 3,
        backoff_base_ms: 100,
    };
    assert_eq!(r.backoff(0).as_millis(), 100);
    assert_eq!(r.backoff(2).as_millis(), 400);
}

#[test]
fn content_filter_is_not_retried() {
    let b = Canned::new(|_, _| Ok(ProviderResponse::failure("content_filter: refused")));
    let p = fast(b.clone());
    let err = p.llm_complete("x", Template::QuoteSelection).unwrap_err();
    assert!(matches!(err, ProviderError::ContentFilter { ref template, .. } if template == "quote-selection"));
    assert_eq!(b.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn empty_prompt_is_an_input_error() {
    let b = Canned::new(|_, _| unreachable!());
    assert!(matches!(
        fast(b).llm_complete("  ", Template::KeywordExtraction),
        Err(ProviderError::Input(_))
    ));
}

#[test]
fn decoding_temperature_depends_on_template() {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let b = Canned::new(move |req, _| {
        log.lock().unwrap().push(req.payload["temperature"].as_f64().unwrap());
        Ok(ProviderResponse::success(json!({"text": ""})))
    });
    let p = fast(b);
    p.llm_complete("a", Template::PlotSegmentation).unwrap();
    p.llm_complete("a", Template::VoiceoverPhrases).unwrap();
    assert_eq!(*seen.lock().unwrap(), [0.0, 0.8]);
}

#[test]
fn embeddings_are_validated() {
    let b = Canned::new(|req, _| {
        let n = req.payload["inputs"].as_array().unwrap().len();
        Ok(ProviderResponse::success(json!({"vectors": vec![vec![1.0, 0.0, 0.0]; n]})))
    });
    let p = fast(b);
    let v = p.embed_text(&["farm".into(), "farm".into()]).unwrap();
    assert_eq!(v.len(), 2);
    assert_eq!(v[0], v[1]);
    assert!(matches!(p.embed_text(&[]), Err(ProviderError::Input(_))));

    let mut wrong_dim = p.clone();
    wrong_dim.embedding_dim = 4;
    assert!(matches!(wrong_dim.embed_text(&["x".into()]), Err(ProviderError::Config(_))));

    let short = fast(Canned::new(|_, _| Ok(ProviderResponse::success(json!({"vectors": []})))));
    assert!(matches!(
        short.embed_text(&["x".into()]),
        Err(ProviderError::InvalidResponse { .. })
    ));
}

fn wav_file(dir: &Path, name: &str, w: &Waveform) -> PathBuf {
    let path = dir.join(name);
    w.write_wav(&path).unwrap();
    path
}

#[test]
fn overlapping_transcript_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let audio = wav_file(dir.path(), "a.wav", &Waveform::silence(100, 1000));
    let b = Canned::new(|_, _| {
        Ok(ProviderResponse::success(json!({"words": [
            {"text": "we", "start_s": 2.0, "end_s": 2.5},
            {"text": "came", "start_s": 2.4, "end_s": 2.8},
        ]})))
    });
    let err = fast(b).transcribe(&audio).unwrap_err();
    assert!(err.to_string().contains("overlaps"), "{err}");

    let ok = Canned::new(|_, _| {
        Ok(ProviderResponse::success(json!({"words": [
            {"text": "we", "start_s": 2.0, "end_s": 2.3, "confidence": 0.7},
            {"text": "came", "start_s": 2.3, "end_s": 2.8},
        ]})))
    });
    let words = fast(ok).transcribe(&audio).unwrap();
    assert_eq!(words.len(), 2);
    assert_eq!(words[1].confidence, 1.0);
}

#[test]
fn music_must_match_requested_duration() {
    let exact = Canned::new(|req, _| {
        let d = req.payload["duration_s"].as_f64().unwrap();
        let w = Waveform::silence((d * 8000.0) as usize, 8000);
        Ok(ProviderResponse::success(json!({"audio": inline_audio(&w).unwrap()})))
    });
    let mut p = fast(exact);
    p.sample_rate = 8000;
    let w = p.generate_music("calm", 30.0).unwrap();
    assert_eq!(w.frames(), 240_000);
    assert!(matches!(p.generate_music("calm", 0.0), Err(ProviderError::Input(_))));

    let short = Canned::new(|_, _| {
        Ok(ProviderResponse::success(json!({"audio": inline_audio(&Waveform::silence(800, 8000)).unwrap()})))
    });
    let mut p = fast(short);
    p.sample_rate = 8000;
    assert!(matches!(
        p.generate_music("calm", 30.0),
        Err(ProviderError::InvalidResponse { .. })
    ));
}

#[test]
fn fixture_store_replays_and_misses_loudly() {
    let dir = tempfile::tempdir().unwrap();
    let store = FixtureStore::new(dir.path());
    let live = Canned::new(|req, _| {
        Ok(ProviderResponse::success(json!({"text": format!("echo {}", req.payload["prompt"])})))
    });
    let recording = fast(Arc::new(Recorder::new(live.clone(), store.clone())));
    let first = recording.llm_complete("segment this", Template::PlotSegmentation).unwrap();

    let replay = fast(Arc::new(store.clone()));
    assert_eq!(replay.llm_complete("segment this", Template::PlotSegmentation).unwrap(), first);
    assert_eq!(live.calls.load(Ordering::SeqCst), 1);

    let miss = replay.llm_complete("something else", Template::PlotSegmentation).unwrap_err();
    assert!(matches!(miss, ProviderError::FixtureMiss { kind: ProviderKind::Llm, .. }));
    // the file lives under <dir>/<kind>/<digest>.json
    let files: Vec<_> = std::fs::read_dir(dir.path().join("llm")).unwrap().collect();
    assert_eq!(files.len(), 1);
}

#[test]
fn digest_ignores_media_location() {
    let dir = tempfile::tempdir().unwrap();
    let a = wav_file(dir.path(), "a.wav", &Waveform::silence(10, 1000));
    let b = wav_file(dir.path(), "b.wav", &Waveform::silence(10, 1000));
    let req = |p: &Path, mode| ProviderRequest {
        kind: ProviderKind::Vad,
        template_id: None,
        payload: json!({"audio": media_ref(p, mode).unwrap()}),
    };
    let da = request_digest(&req(&a, MediaMode::Local));
    assert_eq!(da, request_digest(&req(&b, MediaMode::Local)));
    assert_eq!(da, request_digest(&req(&a, MediaMode::Inline)));
    let c = wav_file(dir.path(), "c.wav", &Waveform::silence(11, 1000));
    assert_ne!(da, request_digest(&req(&c, MediaMode::Local)));
}

#[test]
fn canonical_json_sorts_keys() {
    assert_eq!(
        canonical_json(&json!({"b": [1, {"d": 1, "c": 2}], "a": "x"})),
        r#"{"a":"x","b":[1,{"c":2,"d":1}]}"#
    );
}

#[test]
fn black_frame_has_no_text() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("black.png");
    image::RgbImage::new(32, 32).save(&frame).unwrap();
    let p = fast(Arc::new(ScriptedBackend::new(crate::synth::SyntheticMovie::default(), 16)));
    assert!(!p.ocr_has_text(&frame).unwrap());
    let mut white = image::RgbImage::new(32, 32);
    for x in 0..32 {
        white.put_pixel(x, 5, image::Rgb([255, 255, 255]));
    }
    white.save(&frame).unwrap();
    assert!(p.ocr_has_text(&frame).unwrap());
}

#[test]
fn separation_returns_the_stem() {
    let dir = tempfile::tempdir().unwrap();
    let w = Waveform::mono(vec![0.25; 441], 44_100);
    let path = wav_file(dir.path(), "mix.wav", &w);
    let p = fast(Arc::new(ScriptedBackend::new(crate::synth::SyntheticMovie::default(), 16)));
    let stem = p.separate_vocals(&path).unwrap();
    assert_eq!(stem.frames(), 441);
    assert!((stem.samples[10] - 0.25).abs() < 1e-4);
}

#[test]
fn silent_audio_transcribes_to_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = wav_file(dir.path(), "quiet.wav", &Waveform::silence(44_100 * 60, 44_100));
    let p = fast(Arc::new(ScriptedBackend::new(crate::synth::SyntheticMovie::default(), 16)));
    assert!(p.transcribe(&path).unwrap().is_empty());
}
