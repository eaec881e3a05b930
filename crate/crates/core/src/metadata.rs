//! Movie metadata file: the fields a scraper would collect for one title.

use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::report::Report;

pub const DEFAULT_GENRE: &str = "Drama";

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("cannot read metadata file {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("metadata is not a valid document: {0}")]
    Syntax(String),
    #[error("metadata field `{field}`: {reason}")]
    Field { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovieMetadata {
    pub imdb_id: String,
    pub title: String,
    pub synopsis: String,
    #[serde(rename = "quotes")]
    pub quotes_raw: Vec<String>,
    pub genres: Vec<String>,
    pub director: String,
    pub release_date: NaiveDate,
}

impl MovieMetadata {
    /// English name of the release month, e.g. "November".
    pub fn release_month(&self) -> &'static str {
        const MONTHS: [&str; 12] = [
            "January", "February", "March", "April", "May", "June", "July", "August",
            "September", "October", "November", "December",
        ];
        MONTHS[self.release_date.month0() as usize]
    }

    pub fn to_json(&self) -> Result<String, MetadataError> {
        serde_json::to_string_pretty(self).map_err(|e| MetadataError::Syntax(e.to_string()))
    }

    /// Parses and validates a metadata document. Missing genres fall back to
    /// [`DEFAULT_GENRE`] with a warning.
    pub fn from_json(text: &str, report: &mut Report) -> Result<MovieMetadata, MetadataError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| MetadataError::Syntax(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| MetadataError::Syntax("top level must be an object".into()))?;

        let synopsis = required_str(obj, "synopsis")?;
        if synopsis.trim().is_empty() {
            return Err(MetadataError::Field {
                field: "synopsis",
                reason: "must not be empty".into(),
            });
        }
        let mut genres = optional_str_list(obj, "genres")?;
        genres.retain(|g| !g.trim().is_empty());
        if genres.is_empty() {
            report.warn(
                "genres-defaulted",
                format!("no genres in metadata; defaulting to {DEFAULT_GENRE}"),
            );
            genres.push(DEFAULT_GENRE.to_string());
        }
        let release_date = match obj.get("release_date") {
            Some(Value::String(s)) => {
                NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| MetadataError::Field {
                    field: "release_date",
                    reason: format!("expected YYYY-MM-DD: {e}"),
                })?
            }
            Some(_) => {
                return Err(MetadataError::Field {
                    field: "release_date",
                    reason: "expected a string".into(),
                })
            }
            None => {
                return Err(MetadataError::Field {
                    field: "release_date",
                    reason: "missing".into(),
                })
            }
        };

        Ok(MovieMetadata {
            imdb_id: optional_str(obj, "imdb_id")?.unwrap_or_default(),
            title: optional_str(obj, "title")?.unwrap_or_default(),
            synopsis,
            quotes_raw: optional_str_list(obj, "quotes")?,
            genres,
            director: optional_str(obj, "director")?.unwrap_or_default(),
            release_date,
        })
    }
}

/// Reads the metadata file at `path`.
pub fn load_metadata(path: &Path, report: &mut Report) -> Result<MovieMetadata, MetadataError> {
    let text = std::fs::read_to_string(path).map_err(|e| MetadataError::Unreadable {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    MovieMetadata::from_json(&text, report)
}

fn required_str(obj: &Map<String, Value>, field: &'static str) -> Result<String, MetadataError> {
    optional_str(obj, field)?.ok_or(MetadataError::Field {
        field,
        reason: "missing".into(),
    })
}

fn optional_str(
    obj: &Map<String, Value>,
    field: &'static str,
) -> Result<Option<String>, MetadataError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(MetadataError::Field {
            field,
            reason: format!("expected a string, found {}", type_name(other)),
        }),
    }
}

fn optional_str_list(
    obj: &Map<String, Value>,
    field: &'static str,
) -> Result<Vec<String>, MetadataError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                other => Err(MetadataError::Field {
                    field,
                    reason: format!("list items must be strings, found {}", type_name(other)),
                }),
            })
            .collect(),
        Some(other) => Err(MetadataError::Field {
            field,
            reason: format!("expected a list, found {}", type_name(other)),
        }),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "list",
        Value::Object(_) => "object",
    }
}
