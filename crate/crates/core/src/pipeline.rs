//! Stage orchestration. Each stage reads the cached JSON of the stages
//! before it from the working directory and writes its own, so any stage can
//! be rerun alone.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::assembly::{
    build_music, build_visual_timeline, generate_music_description, generate_voiceover_phrases, n_phrases_for,
    pick_voice, place_voice_clips, render_final, PlacedVoice, RenderInputs, RenderOutput, VoicePlan,
};
use crate::config::{ProviderMode, RunConfig};
use crate::dsp::Waveform;
use crate::error::{Error, Result, Stage};
use crate::media::{toolkit_for, MediaInfo, MediaToolkit};
use crate::metadata::{load_metadata, MovieMetadata};
use crate::prep::{extract_frames, plan_frame_samples, scene_count_for, scrub_synopsis, segment_plot, SubPlot};
use crate::providers::{EmbeddingVector, Providers, TranscriptWord, VadSegment};
use crate::quotes::{
    align_quote, clean_all, cut_quote_clip, filter_candidates, n_quotes_for, refine_with_vad, select_quotes_llm,
    AlignedQuote, Discard, DiscardReason,
};
use crate::report::Report;
use crate::synth::SyntheticMovie;
use crate::timeline::{Clip, ClipKind, TimeSpan, TrailerTimeline};
use crate::visual::{
    cut_standard_clip, detect_shots, extract_keywords, score_frames, select_frames, zone_features, FeatureCache,
    FrameSample,
};

const EMBED_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepOutput {
    pub metadata: MovieMetadata,
    pub info: MediaInfo,
    pub scene_count: usize,
    pub subplots: Vec<SubPlot>,
    pub sample_times: Vec<f64>,
    pub frames: Vec<PathBuf>,
    pub movie_audio: PathBuf,
    pub vocals: PathBuf,
    pub transcript: Vec<TranscriptWord>,
    pub vad: Vec<VadSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualOutput {
    pub keywords: Vec<Vec<String>>,
    pub frames: Vec<FrameSample>,
    /// Chosen frame time per sub-plot.
    pub anchors: Vec<Option<f64>>,
    pub quotes: Vec<AlignedQuote>,
    pub discards: Vec<Discard>,
    pub timeline: TrailerTimeline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiceoverOutput {
    pub plan: VoicePlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundtrackOutput {
    pub music_description: String,
    pub music: PathBuf,
    pub render: RenderOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub trailer: PathBuf,
    pub log: PathBuf,
    pub report_path: PathBuf,
    pub report: Report,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_stage<T: DeserializeOwned>(path: &Path, stage: Stage) -> Result<T> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(serde_json::from_str(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingStageOutput(stage)),
        Err(e) => Err(Error::io(path, e)),
    }
}

pub struct Pipeline {
    pub cfg: RunConfig,
    pub providers: Providers,
    source: Arc<dyn MediaToolkit>,
    sink: Arc<dyn MediaToolkit>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig, providers: Providers) -> Result<Pipeline> {
        cfg.validate()?;
        let source = cfg.toolkit();
        let sink = toolkit_for(&cfg.trailer_path(), cfg.render.toolkit, &cfg.render.ffmpeg, &cfg.render.ffprobe);
        Ok(Pipeline {
            cfg,
            providers,
            source,
            sink,
        })
    }

    pub fn workdir(&self) -> PathBuf {
        self.cfg.workdir()
    }

    pub fn stage_path(&self, stage: Stage) -> PathBuf {
        self.workdir().join(format!("{stage}.json"))
    }

    fn video(&self) -> &Path {
        &self.cfg.project.project.video_path
    }

    pub fn load_prep(&self) -> Result<PrepOutput> {
        read_stage(&self.stage_path(Stage::Prep), Stage::Prep)
    }

    pub fn load_visual(&self) -> Result<VisualOutput> {
        read_stage(&self.stage_path(Stage::Visual), Stage::Visual)
    }

    pub fn load_voiceover(&self) -> Result<VoiceoverOutput> {
        read_stage(&self.stage_path(Stage::Voiceover), Stage::Voiceover)
    }

    /// Runs one stage from the cached outputs of the earlier ones. Its
    /// warnings are also written to `<workdir>/<stage>.report.json`.
    pub fn run_stage(&self, stage: Stage, report: &mut Report) -> Result<()> {
        let mut local = Report::new();
        local.enter(stage);
        let res = match stage {
            Stage::Prep => self.prep(&mut local).map(drop),
            Stage::Visual => self.visual(&mut local).map(drop),
            Stage::Voiceover => self.voiceover(&mut local).map(drop),
            Stage::Soundtrack => self.soundtrack(&mut local).map(drop),
        };
        write_json(&self.workdir().join(format!("{stage}.report.json")), &local)?;
        report.merge(local);
        res.map_err(|e| e.in_stage(stage))
    }

    /// All four stages, then `report.json` beside the trailer.
    pub fn run_all(&self) -> Result<RunOutput> {
        self.run_all_into(&mut Report::new())
    }

    /// `run_all`, collecting warnings into `report` even when a stage fails.
    pub fn run_all_into(&self, report: &mut Report) -> Result<RunOutput> {
        for stage in Stage::ALL {
            self.run_stage(stage, report)?;
        }
        let sound: SoundtrackOutput = read_stage(&self.stage_path(Stage::Soundtrack), Stage::Soundtrack)?;
        let report_path = self.cfg.out_dir().join("report.json");
        write_json(&report_path, &*report)?;
        Ok(RunOutput {
            trailer: sound.render.video,
            log: sound.render.log_path,
            report_path,
            report: report.clone(),
        })
    }

    pub fn prep(&self, report: &mut Report) -> Result<PrepOutput> {
        let cfg = &self.cfg;
        let dir = self.workdir();
        let metadata = load_metadata(&cfg.project.metadata, report)?;
        let info = self.source.probe(self.video())?;
        let sample_times = plan_frame_samples(info.duration_s, &cfg.project.project, report);
        let frames = extract_frames(
            self.source.as_ref(),
            self.video(),
            &sample_times,
            &dir,
            cfg.project.workers,
        )?;
        let scene_count = scene_count_for(cfg.project.project.target_trailer_s, cfg.project.avg_clip_s);
        let synopsis = scrub_synopsis(&metadata.synopsis, &cfg.banned_words()?);
        let subplots = segment_plot(&self.providers, &synopsis, scene_count)?;

        let movie_audio = dir.join("audio").join("movie.wav");
        let vocals = dir.join("audio").join("vocals.wav");
        std::fs::create_dir_all(dir.join("audio")).map_err(|e| Error::io(dir.join("audio"), e))?;
        self.source
            .audio(self.video(), None, cfg.render.sample_rate)?
            .write_wav(&movie_audio)?;
        self.providers.separate_vocals(&movie_audio)?.write_wav(&vocals)?;
        let transcript = self.providers.transcribe(&vocals)?;
        let vad = self.providers.detect_voice_activity(&vocals)?;
        if transcript.is_empty() {
            report.warn("empty-transcript", "no speech recognized in the vocal stem");
        }

        let out = PrepOutput {
            metadata,
            info,
            scene_count,
            subplots,
            sample_times,
            frames,
            movie_audio,
            vocals,
            transcript,
            vad,
        };
        write_json(&self.stage_path(Stage::Prep), &out)?;
        Ok(out)
    }

    fn shots_in(&self, zone: TimeSpan, cache: &mut FeatureCache) -> Result<Vec<crate::timeline::Shot>> {
        let v = &self.cfg.visual;
        let fps = self.cfg.render.fps;
        let feats = zone_features(self.source.as_ref(), self.video(), zone, fps, v.feature_size, cache)?;
        Ok(detect_shots(&feats, v.sbd_threshold, zone, fps))
    }

    pub fn visual(&self, report: &mut Report) -> Result<VisualOutput> {
        let prep = self.load_prep()?;
        let cfg = &self.cfg;
        let duration = prep.info.duration_s;

        let mut keywords = Vec::with_capacity(prep.subplots.len());
        for sp in &prep.subplots {
            keywords.push(extract_keywords(&self.providers, sp, report)?);
        }
        let mut embeddings: Vec<EmbeddingVector> = Vec::with_capacity(prep.frames.len());
        for batch in prep.frames.chunks(EMBED_BATCH) {
            embeddings.extend(self.providers.embed_image(batch)?);
        }
        let mut scores = Vec::with_capacity(keywords.len());
        for kw in &keywords {
            let anchors = if kw.is_empty() { Vec::new() } else { self.providers.embed_text(kw)? };
            scores.push(score_frames(&anchors, &embeddings, report));
        }

        let mut ocr: HashMap<usize, bool> = HashMap::new();
        let selection = select_frames(
            &scores,
            &prep.sample_times,
            duration,
            cfg.project.project.min_frame_gap_frac,
            cfg.visual.ocr_budget,
            |f| {
                if let Some(&t) = ocr.get(&f) {
                    return Ok(t);
                }
                let t = self.providers.ocr_has_text(&prep.frames[f])?;
                ocr.insert(f, t);
                Ok(t)
            },
            report,
        )?;

        let mut cache = FeatureCache::open(
            &self.workdir().join("features.trf"),
            cfg.render.fps,
            cfg.visual.feature_size,
        )?;
        let mut standard = Vec::new();
        let mut anchors = Vec::with_capacity(selection.len());
        for (i, choice) in selection.iter().enumerate() {
            let Some(f) = *choice else {
                anchors.push(None);
                continue;
            };
            let t = prep.sample_times[f];
            anchors.push(Some(t));
            let Some(zone) = cfg.visual.clip.zone(t, duration) else {
                report.warn("empty-zone", format!("no analysis zone around {t:.2} s"));
                continue;
            };
            let shots = self.shots_in(zone, &mut cache)?;
            standard.push(cut_standard_clip(t, &shots, &cfg.visual.clip, prep.subplots[i].index));
        }

        let (quotes, quote_clips, discards) = self.quote_funnel(&prep, &mut cache, report)?;
        cache.save()?;
        let timeline = build_visual_timeline(standard, quote_clips, cfg.project.project.target_trailer_s, report)?;

        let frames = prep
            .sample_times
            .iter()
            .zip(&prep.frames)
            .zip(embeddings)
            .enumerate()
            .map(|(i, ((&t, path), embedding))| FrameSample {
                timestamp_s: t,
                image_ref: path.clone(),
                embedding,
                has_text: ocr.get(&i).copied(),
            })
            .collect();
        let tsv: String = discards.iter().map(|d| format!("{d}\n")).collect();
        let tsv_path = self.workdir().join("quotes_discarded.tsv");
        std::fs::write(&tsv_path, tsv).map_err(|e| Error::io(&tsv_path, e))?;

        let out = VisualOutput {
            keywords,
            frames,
            anchors,
            quotes,
            discards,
            timeline,
        };
        write_json(&self.stage_path(Stage::Visual), &out)?;
        Ok(out)
    }

    /// Clean, filter, rank, align, refine and cut. Returns the kept quotes in
    /// rank order with their clips, plus every discard.
    fn quote_funnel(
        &self,
        prep: &PrepOutput,
        cache: &mut FeatureCache,
        report: &mut Report,
    ) -> Result<(Vec<AlignedQuote>, Vec<Clip>, Vec<Discard>)> {
        let q = &self.cfg.quotes;
        let meta = &prep.metadata;
        if meta.quotes_raw.is_empty() {
            report.warn("no-quotes", "metadata lists no quotes");
            return Ok(Default::default());
        }
        let candidates = clean_all(&meta.quotes_raw, &self.cfg.lexicon()?);
        let outcome = filter_candidates(&candidates, &q.filter, &self.cfg.banned_words()?);
        let mut discards = outcome.discards;
        let n = q.n_quotes.unwrap_or_else(|| n_quotes_for(prep.scene_count));
        let selected = select_quotes_llm(&self.providers, &outcome.shortlist, n, meta, report)?;
        for c in &outcome.shortlist {
            if !selected.iter().any(|s| s.source_index == c.source_index) {
                discards.push(Discard {
                    source_index: c.source_index,
                    reason: DiscardReason::NotSelected,
                    text: c.text.clone(),
                });
            }
        }

        let mut kept: Vec<AlignedQuote> = Vec::new();
        let mut clips = Vec::new();
        for cand in selected {
            let Some(m) = align_quote(&cand.text, &prep.transcript, &q.align) else {
                report.warn("quote-unaligned", format!("no audio match for \"{}\"", cand.text));
                discards.push(Discard {
                    source_index: cand.source_index,
                    reason: DiscardReason::NoAudioMatch,
                    text: cand.text.clone(),
                });
                continue;
            };
            let refined = refine_with_vad(m.span, &prep.vad, q.vad_pad_s);
            if refined.is_none() {
                report.warn("vad-no-speech", format!("no speech under \"{}\"; keeping the ASR span", cand.text));
            }
            let span = refined.unwrap_or(m.span);
            if kept.iter().any(|k| k.source_span.overlaps(&span)) {
                report.warn("quote-overlap", format!("\"{}\" overlaps a kept quote", cand.text));
                continue;
            }
            let aligned = AlignedQuote {
                quote: cand,
                source_span: span,
                match_ratio: m.ratio,
                refined: refined.is_some(),
            };
            let zone = TimeSpan::new(
                (span.start() - q.sbd_margin_s).max(0.0),
                (span.end() + q.sbd_margin_s).min(prep.info.duration_s.max(span.end())),
            )?;
            let shots = self.shots_in(zone, cache)?;
            clips.push(cut_quote_clip(&aligned, &shots, q.min_shot_s));
            kept.push(aligned);
        }
        Ok((kept, clips, discards))
    }

    pub fn voiceover(&self, report: &mut Report) -> Result<VoiceoverOutput> {
        let prep = self.load_prep()?;
        let visual = self.load_visual()?;
        let total = visual.timeline.total_duration_s;
        let n = self.cfg.audio.phrase_count.unwrap_or_else(|| n_phrases_for(total));
        let voice_id = pick_voice(&prep.metadata.genres, &self.cfg.voice_map()?);
        let mut plan = VoicePlan {
            phrases: Vec::new(),
            voice_id,
            clips: Vec::new(),
        };
        if n == 0 {
            report.warn("voiceover-disabled", "phrase count is 0; no voice-over");
        } else {
            plan.phrases = generate_voiceover_phrases(&self.providers, &prep.metadata, n, report)?;
            let dir = self.workdir().join("voice");
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut audio = Vec::with_capacity(plan.phrases.len());
            for (i, phrase) in plan.phrases.iter().enumerate() {
                let w = self.providers.synthesize_speech(phrase, &plan.voice_id)?;
                let path = dir.join(format!("{i}.wav"));
                w.write_wav(&path)?;
                audio.push((path, w.duration_s()));
            }
            let quote_spans: Vec<TimeSpan> = visual
                .timeline
                .clips
                .iter()
                .filter(|c| c.kind == ClipKind::Quote)
                .filter_map(|c| c.trailer_span)
                .collect();
            let lengths: Vec<f64> = audio.iter().map(|a| a.1).collect();
            let placed = place_voice_clips(&lengths, &quote_spans, total, self.cfg.audio.voice_pad_s, report);
            for ((phrase, (path, _)), span) in plan.phrases.iter().zip(audio).zip(placed) {
                if let Some(span) = span {
                    plan.clips.push(PlacedVoice {
                        phrase: phrase.clone(),
                        span,
                        audio: path,
                    });
                }
            }
        }
        if plan.clips.is_empty() {
            report.warn("no-voiceover", "the trailer has no voice-over");
        }
        let out = VoiceoverOutput { plan };
        write_json(&self.stage_path(Stage::Voiceover), &out)?;
        Ok(out)
    }

    pub fn soundtrack(&self, report: &mut Report) -> Result<SoundtrackOutput> {
        let prep = self.load_prep()?;
        let visual = self.load_visual()?;
        let voice = self.load_voiceover()?;
        let total = visual.timeline.total_duration_s;
        let music_description = generate_music_description(&self.providers, &prep.metadata, report)?;
        let music = build_music(&self.providers, &music_description, total, &self.cfg.audio.music)?;
        let music_path = self.workdir().join("audio").join("music.wav");
        music.write_wav(&music_path)?;

        let sr = self.cfg.render.sample_rate;
        let vocals = Waveform::read_wav(&prep.vocals)?.resampled(sr);
        let voices = voice
            .plan
            .clips
            .iter()
            .map(|c| Ok((c.span, Waveform::read_wav(&c.audio)?.resampled(sr), c.phrase.clone())))
            .collect::<Result<Vec<_>>>()?;
        let inputs = RenderInputs {
            timeline: &visual.timeline,
            video: self.video(),
            source: self.source.as_ref(),
            sink: self.sink.as_ref(),
            vocals: &vocals,
            voices: &voices,
            music: &music,
        };
        let render = render_final(&inputs, &self.cfg.render_params(), &self.cfg.trailer_path(), report)?;
        let out = SoundtrackOutput {
            music_description,
            music: music_path,
            render,
        };
        write_json(&self.stage_path(Stage::Soundtrack), &out)?;
        Ok(out)
    }
}

/// Writes a synthetic movie, its metadata and a scripted-mode config into
/// `dir`. Returns the config path.
pub fn synth_project(dir: &Path, movie: &SyntheticMovie) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    movie.write(&dir.join("movie.trv"))?;
    let meta = movie.metadata().to_json()?;
    std::fs::write(dir.join("metadata.json"), meta).map_err(|e| Error::io(dir.join("metadata.json"), e))?;
    let mut cfg = RunConfig::default();
    cfg.project.project.video_path = "movie.trv".into();
    cfg.project.project.imdb_id = movie.metadata().imdb_id;
    cfg.project.project.project_name = "trailer".into();
    cfg.project.project.sample_interval_s = 1.0;
    cfg.project.project.target_trailer_s = 48.0;
    cfg.project.metadata = "metadata.json".into();
    cfg.project.workdir = Some("work".into());
    cfg.project.out_dir = Some("out".into());
    cfg.providers.mode = ProviderMode::Scripted;
    cfg.providers.embedding_dim = 16;
    cfg.providers.retry.backoff_base_ms = 1;
    cfg.render.fps = movie.fps;
    cfg.render.width = movie.width;
    cfg.render.height = movie.height;
    cfg.render.sample_rate = movie.sample_rate;
    let path = dir.join("trailer.toml");
    std::fs::write(&path, cfg.to_toml()?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
