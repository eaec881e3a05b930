//! Clip ordering and interleaving, voice-over planning, soundtrack and the
//! final render, plus survey aggregation.

mod interleave;
mod music;
mod place;
mod render;
pub mod survey;
mod voice;

pub use interleave::{build_visual_timeline, interleave, order_standard_clips, Slot};
pub use music::{build_music, generate_music_description, loop_with_crossfade, missing_music_fields, MusicParams};
pub use place::{place_voice_clips, PlacedVoice, VoicePlan};
pub use render::{adjust_quote_volume, render_final, RenderInputs, RenderOutput, RenderParams};
pub use voice::{generate_voiceover_phrases, n_phrases_for, pick_voice, GenreVoiceMap};
