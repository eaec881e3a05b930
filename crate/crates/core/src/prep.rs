//! Preparation stage: project settings, the frame sampling plan, frame
//! extraction into the project cache and plot segmentation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::MediaToolkit;
use crate::prompts;
use crate::providers::{Providers, Template};
use crate::report::Report;
use crate::text::{parse_list, BannedWords};
use crate::timeline::TIME_EPS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectConfig {
    pub imdb_id: String,
    pub video_path: PathBuf,
    pub project_name: String,
    pub sample_interval_s: f64,
    pub head_skip_frac: f64,
    pub tail_skip_frac: f64,
    pub target_trailer_s: f64,
    pub min_frame_gap_frac: f64,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            imdb_id: String::new(),
            video_path: PathBuf::new(),
            project_name: "trailer".into(),
            sample_interval_s: 9.0,
            head_skip_frac: 0.04,
            tail_skip_frac: 0.08,
            target_trailer_s: 90.0,
            min_frame_gap_frac: 0.015,
        }
    }
}

impl ProjectConfig {
    pub fn validate(&self) -> Result<()> {
        let skip = self.head_skip_frac + self.tail_skip_frac;
        if !(self.head_skip_frac >= 0.0 && self.tail_skip_frac >= 0.0 && skip < 1.0) {
            return Err(Error::Config(format!(
                "head_skip_frac + tail_skip_frac must lie in [0, 1), got {skip}"
            )));
        }
        if !(self.sample_interval_s > 0.0 && self.sample_interval_s.is_finite()) {
            return Err(Error::Config("sample_interval_s must be positive".into()));
        }
        if !(self.min_frame_gap_frac > 0.0) {
            return Err(Error::Config("min_frame_gap_frac must be positive".into()));
        }
        if !(self.target_trailer_s > 0.0 && self.target_trailer_s.is_finite()) {
            return Err(Error::Config("target_trailer_s must be positive".into()));
        }
        Ok(())
    }
}

/// Sample times `head + k * interval` up to `duration * (1 - tail)`.
pub fn plan_frame_samples(duration_s: f64, cfg: &ProjectConfig, report: &mut Report) -> Vec<f64> {
    if !(duration_s > 0.0) {
        report.warn("empty-sampling-window", format!("video duration {duration_s} s"));
        return Vec::new();
    }
    let head = duration_s * cfg.head_skip_frac;
    let end = duration_s * (1.0 - cfg.tail_skip_frac);
    let mut out = Vec::new();
    // multiply rather than accumulate so spacing stays exact
    let mut k = 0u64;
    loop {
        let t = head + k as f64 * cfg.sample_interval_s;
        if t > end + TIME_EPS {
            break;
        }
        out.push(t);
        k += 1;
    }
    if out.is_empty() || end <= head {
        out.clear();
        report.warn(
            "empty-sampling-window",
            format!("no sample fits between {head:.3} s and {end:.3} s"),
        );
    }
    out
}

/// `round(target / avg)` clamped to [6, 30].
pub fn scene_count_for(target_trailer_s: f64, avg_clip_s: f64) -> usize {
    if !(target_trailer_s > 0.0 && avg_clip_s > 0.0) {
        return 6;
    }
    ((target_trailer_s / avg_clip_s).round() as usize).clamp(6, 30)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubPlot {
    pub index: usize,
    pub text: String,
}

pub fn scrub_synopsis(synopsis: &str, banned: &BannedWords) -> String {
    banned.scrub(synopsis)
}

/// Asks the LLM for exactly `n_scenes` sub-plots; one corrective reprompt.
pub fn segment_plot(providers: &Providers, synopsis: &str, n_scenes: usize) -> Result<Vec<SubPlot>> {
    if n_scenes == 0 {
        return Err(Error::InvalidInput("scene count must be positive".into()));
    }
    if synopsis.trim().is_empty() {
        return Err(Error::InvalidInput("synopsis is empty".into()));
    }
    let prompt = prompts::plot_segmentation(synopsis, n_scenes);
    let mut lines = parse_list(&providers.llm_complete(&prompt, Template::PlotSegmentation)?);
    if lines.len() != n_scenes {
        let retry = prompts::plot_segmentation_retry(&prompt, n_scenes, lines.len());
        lines = parse_list(&providers.llm_complete(&retry, Template::PlotSegmentation)?);
    }
    if lines.len() != n_scenes {
        return Err(Error::Parse {
            template: Template::PlotSegmentation.id().into(),
            reason: format!("expected {n_scenes} sub-plots, got {}", lines.len()),
        });
    }
    Ok(lines
        .into_iter()
        .enumerate()
        .map(|(index, text)| SubPlot { index, text })
        .collect())
}

pub fn frame_path(project_dir: &Path, t: f64) -> PathBuf {
    project_dir
        .join("frames")
        .join(format!("{}.png", (t * 1000.0).round() as u64))
}

/// Decodes one still per timestamp into `<project>/frames/<ms>.png`,
/// reusing files already present. Work is split across `workers` threads.
pub fn extract_frames(
    toolkit: &dyn MediaToolkit,
    video: &Path,
    times: &[f64],
    project_dir: &Path,
    workers: usize,
) -> Result<Vec<PathBuf>> {
    let dir = project_dir.join("frames");
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let paths: Vec<PathBuf> = times.iter().map(|&t| frame_path(project_dir, t)).collect();
    let jobs: Vec<(f64, &PathBuf)> = times
        .iter()
        .copied()
        .zip(&paths)
        .filter(|(_, p)| !p.exists())
        .collect();
    if jobs.is_empty() {
        return Ok(paths);
    }
    let chunk = jobs.len().div_ceil(workers.max(1));
    std::thread::scope(|s| -> Result<()> {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|batch| {
                s.spawn(move || -> Result<()> {
                    for &(t, path) in batch {
                        let img = toolkit.frame_at(video, t)?;
                        img.save(path)
                            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
                    }
                    Ok(())
                })
            })
            .collect();
        for h in handles {
            h.join().expect("frame worker panicked")?;
        }
        Ok(())
    })?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nine_hundred_seconds_with_defaults() {
        let mut r = Report::new();
        let plan = plan_frame_samples(900.0, &ProjectConfig::default(), &mut r);
        // arithmetic series from 36 to 828 in steps of 9
        let expected = ((828.0 - 36.0) / 9.0) as usize + 1;
        assert_eq!(plan.len(), expected);
        assert_eq!(plan[0], 36.0);
        assert!(*plan.last().unwrap() <= 828.0);
        assert!(plan.windows(2).all(|w| w[1] - w[0] == 9.0));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn empty_window_warns() {
        let cfg = ProjectConfig {
            head_skip_frac: 0.5,
            tail_skip_frac: 0.5,
            ..ProjectConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut r = Report::new();
        assert!(plan_frame_samples(10.0, &cfg, &mut r).is_empty());
        assert!(r.has("empty-sampling-window"));
    }

    #[test]
    fn scene_counts() {
        assert_eq!(scene_count_for(90.0, 4.5), 20);
        assert_eq!(scene_count_for(10.0, 5.0), 6);
        assert_eq!(scene_count_for(600.0, 4.0), 30);
    }

    #[test]
    fn frame_names_are_milliseconds() {
        assert_eq!(frame_path(Path::new("p"), 36.0), Path::new("p/frames/36000.png"));
        assert_eq!(frame_path(Path::new("p"), 1.2345), Path::new("p/frames/1235.png"));
    }

    proptest! {
        #[test]
        fn plan_is_evenly_spaced_inside_the_window(
            duration in 1.0f64..20_000.0,
            interval in 0.5f64..30.0,
            head in 0.0f64..0.4,
            tail in 0.0f64..0.4,
        ) {
            let cfg = ProjectConfig {
                sample_interval_s: interval,
                head_skip_frac: head,
                tail_skip_frac: tail,
                ..ProjectConfig::default()
            };
            let plan = plan_frame_samples(duration, &cfg, &mut Report::new());
            let end = duration * (1.0 - tail);
            for (k, t) in plan.iter().enumerate() {
                prop_assert_eq!(*t, duration * head + k as f64 * interval);
                prop_assert!(*t <= end + 1e-9);
            }
            if let Some(last) = plan.last() {
                prop_assert!(last + interval > end);
            }
        }
    }
}
