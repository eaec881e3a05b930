//! Warning collection. Degraded-but-valid outcomes (dropped quotes, skipped
//! sub-plots, fallback keywords) are recorded here instead of failing a run.

use serde::{Deserialize, Serialize};

use crate::error::Stage;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stage: Option<Stage>,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub warnings: Vec<Warning>,
    #[serde(skip)]
    stage: Option<Stage>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tags subsequent warnings with `stage`.
    pub fn enter(&mut self, stage: Stage) {
        self.stage = Some(stage);
    }

    pub fn warn(&mut self, code: &str, message: impl Into<String>) {
        let message = message.into();
        tracing::warn!(code, "{message}");
        self.warnings.push(Warning {
            stage: self.stage,
            code: code.to_string(),
            message,
        });
    }

    pub fn has(&self, code: &str) -> bool {
        self.warnings.iter().any(|w| w.code == code)
    }

    pub fn merge(&mut self, other: Report) {
        self.warnings.extend(other.warnings);
    }
}
