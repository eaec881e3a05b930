use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::media::MediaError;
use crate::metadata::MetadataError;
use crate::providers::ProviderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage, used to tag errors that abort a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Prep,
    Visual,
    Voiceover,
    Soundtrack,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Prep, Stage::Visual, Stage::Voiceover, Stage::Soundtrack];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Prep => "prep",
            Stage::Visual => "visual",
            Stage::Voiceover => "voiceover",
            Stage::Soundtrack => "soundtrack",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Metadata(#[from] MetadataError),

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error(transparent)]
    Media(#[from] MediaError),

    /// An LLM completion could not be parsed into the expected shape, even after a reprompt.
    #[error("could not parse `{template}` completion: {reason}")]
    Parse { template: String, reason: String },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{0}` has no cached output; run it first")]
    MissingStageOutput(Stage),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: Stage) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}
