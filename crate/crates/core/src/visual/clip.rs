use serde::{Deserialize, Serialize};

use crate::timeline::{Blanking, Clip, Shot, TimeSpan, TIME_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClipParams {
    pub buffer_s: f64,
    pub target_min_s: f64,
    pub target_max_s: f64,
    pub min_shot_s: f64,
}

impl Default for ClipParams {
    fn default() -> Self {
        ClipParams {
            buffer_s: 10.0,
            target_min_s: 2.5,
            target_max_s: 5.5,
            min_shot_s: 0.5,
        }
    }
}

impl ClipParams {
    /// Analysis zone around an anchor, clamped to the video.
    pub fn zone(&self, anchor_s: f64, video_duration_s: f64) -> Option<TimeSpan> {
        let a = (anchor_s - self.buffer_s).max(0.0);
        let b = (anchor_s + self.buffer_s).min(video_duration_s);
        TimeSpan::new(a, b).ok()
    }
}

/// Standard Clip for an anchor frame, given the shots of its zone.
///
/// The clip opens at the start of the anchor's shot and takes whole shots
/// until it reaches `target_min_s`, trimming the last one to stay under
/// `target_max_s`. Boundary shots covering less than `min_shot_s` are
/// blanked. If the zone runs out first, a trailing Black clip pads the
/// result to `target_min_s`.
pub fn cut_standard_clip(anchor_s: f64, shots: &[Shot], params: &ClipParams, subplot: usize) -> Vec<Clip> {
    if shots.is_empty() {
        return vec![Clip::black(params.target_min_s)];
    }
    let s = shots
        .iter()
        .position(|sh| anchor_s >= sh.span.start() - TIME_EPS && anchor_s < sh.span.end())
        .unwrap_or_else(|| {
            if anchor_s < shots[0].span.start() {
                0
            } else {
                shots.len() - 1
            }
        });
    let start = shots[s].span.start();
    let mut j = s;
    let mut end = shots[s].span.end();
    while end - start < params.target_min_s - TIME_EPS && j + 1 < shots.len() {
        j += 1;
        end = shots[j].span.end();
    }
    if end - start > params.target_max_s {
        end = start + params.target_max_s;
    }
    let span = TimeSpan::new(start, end).expect("shots have positive length");
    let mut clip = Clip::standard(span, subplot);
    if j > s {
        let head = shots[s].span.end() - start;
        let tail = end - shots[j].span.start();
        clip.blank = Blanking {
            head_s: if head < params.min_shot_s { head } else { 0.0 },
            tail_s: if tail < params.min_shot_s { tail } else { 0.0 },
        };
    }
    let mut out = vec![clip];
    let short = params.target_min_s - span.duration();
    if short > TIME_EPS {
        out.push(Clip::black(short));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn shots(cuts: &[f64]) -> Vec<Shot> {
        cuts.windows(2)
            .enumerate()
            .map(|(i, w)| Shot {
                span: TimeSpan::new(w[0], w[1]).unwrap(),
                first_frame_idx: i,
                last_frame_idx: i,
            })
            .collect()
    }

    fn total(clips: &[Clip]) -> f64 {
        clips.iter().map(|c| c.length_s).sum()
    }

    #[test]
    fn a_five_second_shot_is_taken_whole() {
        let c = cut_standard_clip(12.0, &shots(&[0.0, 10.0, 15.0, 20.0]), &ClipParams::default(), 3);
        assert_eq!(c.len(), 1);
        let src = c[0].source_span.unwrap();
        assert_eq!((src.start(), src.end()), (10.0, 15.0));
        assert!(c[0].blank.is_empty());
        assert_eq!(c[0].subplot, Some(3));
    }

    #[test]
    fn short_shot_extends_into_the_next_and_is_trimmed() {
        let c = cut_standard_clip(10.5, &shots(&[0.0, 10.0, 11.0, 15.0, 20.0]), &ClipParams::default(), 0);
        assert_eq!(c.len(), 1);
        let src = c[0].source_span.unwrap();
        assert_eq!(src.start(), 10.0);
        // 1 s + 4 s = 5 s fits under 5.5
        assert_eq!(src.end(), 15.0);
        let c = cut_standard_clip(10.5, &shots(&[0.0, 10.0, 11.0, 20.0]), &ClipParams::default(), 0);
        assert_eq!(c[0].source_span.unwrap().end(), 15.5);
    }

    #[test]
    fn orphan_head_shot_is_blanked() {
        let c = cut_standard_clip(10.1, &shots(&[0.0, 10.0, 10.3, 20.0]), &ClipParams::default(), 0);
        assert!((c[0].blank.head_s - 0.3).abs() < 1e-12);
        assert_eq!(c[0].blank.tail_s, 0.0);
    }

    #[test]
    fn zone_clamped_at_video_start() {
        let p = ClipParams::default();
        let z = p.zone(3.0, 60.0).unwrap();
        assert_eq!((z.start(), z.end()), (0.0, 13.0));
        let z = p.zone(58.0, 60.0).unwrap();
        assert_eq!(z.end(), 60.0);
    }

    #[test]
    fn exhausted_zone_pads_with_black() {
        let c = cut_standard_clip(59.5, &shots(&[59.0, 60.0]), &ClipParams::default(), 0);
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].kind, crate::timeline::ClipKind::Black);
        assert!((total(&c) - 2.5).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn length_lands_in_the_target_range(
            gaps in proptest::collection::vec(0.05f64..8.0, 1..12),
            pick in 0.0f64..1.0,
        ) {
            let mut cuts = vec![0.0];
            for g in &gaps {
                cuts.push(cuts.last().unwrap() + g);
            }
            let anchor = pick * cuts.last().unwrap() * 0.999;
            let p = ClipParams::default();
            let c = cut_standard_clip(anchor, &shots(&cuts), &p, 0);
            let t = total(&c);
            prop_assert!(t >= p.target_min_s - 1e-9 && t <= p.target_max_s + 1e-9, "{}", t);
            for clip in &c {
                prop_assert!(clip.check().is_ok());
            }
        }
    }
}
