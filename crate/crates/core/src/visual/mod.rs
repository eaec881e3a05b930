//! Visual stage: keyword extraction, frame scoring and greedy selection,
//! shot boundary detection and Standard Clip cutting.

mod cache;
mod clip;
mod keywords;
mod sbd;
mod score;
mod select;

pub use cache::FeatureCache;
pub use clip::{cut_standard_clip, ClipParams};
pub use keywords::{extract_keywords, fallback_keywords, KEYWORD_COUNT};
pub use sbd::{detect_shots, feature_of, frame_index, zone_features, FrameFeature};
pub use score::{cosine, score_frames};
pub use select::{select_frames, Selection};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::providers::EmbeddingVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub timestamp_s: f64,
    pub image_ref: PathBuf,
    pub embedding: EmbeddingVector,
    /// `None` until screened.
    pub has_text: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisualParams {
    #[serde(flatten)]
    pub clip: ClipParams,
    pub sbd_threshold: f64,
    /// Side of the square thumbnails shot detection runs on.
    pub feature_size: u32,
    /// Frames OCR-screened per sub-plot at most.
    pub ocr_budget: usize,
}

impl Default for VisualParams {
    fn default() -> Self {
        VisualParams {
            clip: ClipParams::default(),
            sbd_threshold: 27.0,
            feature_size: 32,
            ocr_budget: 20,
        }
    }
}
