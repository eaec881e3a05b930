use std::path::Path;

use image::imageops::FilterType;
use serde::{Deserialize, Serialize};

use super::FeatureCache;
use crate::error::Result;
use crate::media::{hsv_means, MediaToolkit};
use crate::timeline::{Shot, TimeSpan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameFeature {
    /// Source frame number at the analysis rate.
    pub frame_idx: usize,
    pub hsv_mean: [f64; 3],
}

/// HSV channel means of `img` shrunk to `size` x `size`.
pub fn feature_of(frame_idx: usize, img: &image::RgbImage, size: u32) -> FrameFeature {
    let small = if img.width() == size && img.height() == size {
        img.clone()
    } else {
        image::imageops::resize(img, size, size, FilterType::Triangle)
    };
    FrameFeature {
        frame_idx,
        hsv_mean: hsv_means(&small),
    }
}

/// First frame at or after `t` on the `fps` grid.
pub fn frame_index(t: f64, fps: f64) -> usize {
    (t * fps - 1e-6).ceil().max(0.0) as usize
}

fn distance(a: &FrameFeature, b: &FrameFeature) -> f64 {
    (0..3).map(|i| (a.hsv_mean[i] - b.hsv_mean[i]).abs()).sum::<f64>() / 3.0
}

/// Splits `zone` into shots. A cut falls before frame `k` when the mean
/// absolute HSV difference to frame `k - 1` exceeds `threshold`; cut times
/// are `frame_idx / fps`. The shots partition `zone` exactly.
pub fn detect_shots(features: &[FrameFeature], threshold: f64, zone: TimeSpan, fps: f64) -> Vec<Shot> {
    let mut bounds = vec![0usize];
    for k in 1..features.len() {
        let t = features[k].frame_idx as f64 / fps;
        if distance(&features[k - 1], &features[k]) > threshold && t > zone.start() && t < zone.end() {
            bounds.push(k);
        }
    }
    let first = features.first().map_or(0, |f| f.frame_idx);
    let last = features.last().map_or(0, |f| f.frame_idx);
    let mut shots = Vec::with_capacity(bounds.len());
    for (n, &b) in bounds.iter().enumerate() {
        let next = bounds.get(n + 1).copied();
        let start = if n == 0 { zone.start() } else { features[b].frame_idx as f64 / fps };
        let end = next.map_or(zone.end(), |k| features[k].frame_idx as f64 / fps);
        shots.push(Shot {
            span: TimeSpan::new(start, end).expect("cut times increase inside the zone"),
            first_frame_idx: features.get(b).map_or(first, |f| f.frame_idx),
            last_frame_idx: next.map_or(last, |k| features[k - 1].frame_idx),
        });
    }
    shots
}

/// Features for every grid frame inside `zone`, served from `cache` where
/// possible.
pub fn zone_features(
    toolkit: &dyn MediaToolkit,
    video: &Path,
    zone: TimeSpan,
    fps: f64,
    size: u32,
    cache: &mut FeatureCache,
) -> Result<Vec<FrameFeature>> {
    let k0 = frame_index(zone.start(), fps);
    let k1 = frame_index(zone.end(), fps);
    if k1 <= k0 {
        return Ok(Vec::new());
    }
    if !(k0..k1).all(|k| cache.get(k).is_some()) {
        let span = TimeSpan::new(k0 as f64 / fps, k1 as f64 / fps)?;
        let frames = toolkit.frames(video, span, fps, (size, size))?;
        for (i, img) in frames.iter().enumerate() {
            cache.insert(feature_of(k0 + i, img, size));
        }
    }
    Ok((k0..k1).filter_map(|k| cache.get(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn feats(values: &[f64]) -> Vec<FrameFeature> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| FrameFeature {
                frame_idx: i,
                hsv_mean: [v; 3],
            })
            .collect()
    }

    fn zone(n: usize) -> TimeSpan {
        TimeSpan::new(0.0, n as f64).unwrap()
    }

    #[test]
    fn constant_frames_are_one_shot() {
        let shots = detect_shots(&feats(&[10.0; 20]), 27.0, zone(20), 1.0);
        assert_eq!(shots.len(), 1);
        assert_eq!((shots[0].first_frame_idx, shots[0].last_frame_idx), (0, 19));
    }

    #[test]
    fn hard_cut_splits_at_its_frame() {
        let mut v = vec![0.0; 12];
        v[7..].fill(54.0);
        let shots = detect_shots(&feats(&v), 27.0, zone(12), 1.0);
        assert_eq!(shots.len(), 2);
        assert_eq!(shots[1].first_frame_idx, 7);
        assert_eq!(shots[0].last_frame_idx, 6);
        assert_eq!(shots[0].span.end(), 7.0);
    }

    #[test]
    fn difference_equal_to_threshold_is_not_a_cut() {
        let shots = detect_shots(&feats(&[0.0, 27.0]), 27.0, zone(2), 1.0);
        assert_eq!(shots.len(), 1);
    }

    #[test]
    fn fewer_than_two_frames() {
        assert_eq!(detect_shots(&feats(&[3.0]), 27.0, zone(1), 1.0).len(), 1);
        assert_eq!(detect_shots(&[], 27.0, zone(1), 1.0).len(), 1);
    }

    proptest! {
        #[test]
        fn shots_partition_the_zone(values in proptest::collection::vec(0.0f64..255.0, 1..80), off in 0.0f64..0.9) {
            let fs = feats(&values);
            let z = TimeSpan::new(off, values.len() as f64).unwrap();
            let shots = detect_shots(&fs, 27.0, z, 1.0);
            prop_assert_eq!(shots[0].span.start(), z.start());
            prop_assert_eq!(shots.last().unwrap().span.end(), z.end());
            for w in shots.windows(2) {
                prop_assert_eq!(w[0].span.end(), w[1].span.start());
                prop_assert_eq!(w[0].last_frame_idx + 1, w[1].first_frame_idx);
            }
            for s in &shots {
                prop_assert!(s.first_frame_idx <= s.last_frame_idx);
            }
        }
    }
}
