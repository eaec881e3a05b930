//! Trailer assembly engine.
//!
//! A source video plus a metadata file go in; a trailer (video, mixed audio)
//! and a timestamp log come out. The work happens in four stages:
//! preparation, visual, voice-over and soundtrack. Every generative or
//! learned capability is reached through [`providers`], so the composition
//! logic here stays deterministic and can be replayed from fixtures.

pub mod api;
pub mod assembly;
pub mod config;
pub mod dsp;
pub mod error;
pub mod media;
pub mod metadata;
pub mod pipeline;
pub mod prep;
pub mod prompts;
pub mod providers;
pub mod quotes;
pub mod report;
pub mod synth;
pub mod text;
pub mod timeline;
pub mod visual;

pub use error::{Error, Result, Stage};
pub use report::{Report, Warning};
