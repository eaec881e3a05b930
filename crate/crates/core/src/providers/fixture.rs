//! Record/replay fixtures keyed by request digest.
//!
//! Layout: `<dir>/<kind>/<digest>.json`, each file holding the request that
//! produced it and the recorded response envelope. The digest covers the
//! kind, template id and payload; media references are reduced to their
//! content hash so the same file at a different path replays the same
//! response.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{ProviderBackend, ProviderError, ProviderRequest, ProviderResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub request: ProviderRequest,
    pub response: ProviderResponse,
}

/// Serializes with object keys sorted at every level.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}:", Value::String(k.clone()));
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        scalar => {
            let _ = write!(out, "{scalar}");
        }
    }
}

/// Drops `path`/`base64` from media references that carry a `sha256`.
fn strip_media_locations(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let is_media = map.contains_key("sha256")
                && (map.contains_key("path") || map.contains_key("base64"));
            Value::Object(
                map.iter()
                    .filter(|(k, _)| !(is_media && (k.as_str() == "path" || k.as_str() == "base64")))
                    .map(|(k, v)| (k.clone(), strip_media_locations(v)))
                    .collect(),
            )
        }
        Value::Array(items) => Value::Array(items.iter().map(strip_media_locations).collect()),
        other => other.clone(),
    }
}

pub fn request_digest(req: &ProviderRequest) -> String {
    let keyed = serde_json::json!({
        "kind": req.kind,
        "template_id": req.template_id,
        "payload": strip_media_locations(&req.payload),
    });
    hex::encode(Sha256::digest(canonical_json(&keyed).as_bytes()))
}

/// Replay-only backend: every request must have a recorded fixture.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    dir: PathBuf,
}

impl FixtureStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureStore { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, req: &ProviderRequest) -> PathBuf {
        self.dir
            .join(req.kind.as_str())
            .join(format!("{}.json", request_digest(req)))
    }

    pub fn save(&self, req: &ProviderRequest, resp: &ProviderResponse) -> Result<PathBuf, ProviderError> {
        let path = self.path_for(req);
        let parent = path.parent().expect("fixture path has a parent");
        std::fs::create_dir_all(parent)
            .map_err(|e| ProviderError::Config(format!("cannot create {}: {e}", parent.display())))?;
        let record = FixtureRecord {
            request: req.clone(),
            response: resp.clone(),
        };
        let text = serde_json::to_string_pretty(&record)
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        std::fs::write(&path, text)
            .map_err(|e| ProviderError::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn load(&self, req: &ProviderRequest) -> Result<Option<FixtureRecord>, ProviderError> {
        let path = self.path_for(req);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| {
                ProviderError::Config(format!("corrupt fixture {}: {e}", path.display()))
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(ProviderError::Config(format!(
                "cannot read {}: {e}",
                path.display()
            ))),
        }
    }
}

impl ProviderBackend for FixtureStore {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        self.load(req)?
            .map(|rec| rec.response)
            .ok_or_else(|| ProviderError::FixtureMiss {
                kind: req.kind,
                digest: request_digest(req),
            })
    }
}

/// Forwards to a live backend and stores every successful response.
pub struct Recorder {
    live: Arc<dyn ProviderBackend>,
    store: FixtureStore,
}

impl Recorder {
    pub fn new(live: Arc<dyn ProviderBackend>, store: FixtureStore) -> Self {
        Recorder { live, store }
    }
}

impl ProviderBackend for Recorder {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let resp = self.live.call(req)?;
        if resp.ok {
            self.store.save(req, &resp)?;
        }
        Ok(resp)
    }
}
