use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::FrameFeature;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TRF1";
const RECORD: usize = 8 + 3 * 8;

/// Binary table of frame index to HSV means, one file per project.
///
/// Layout: `TRF1`, analysis fps (f64 LE), size (u32 LE), record count
/// (u64 LE), then per record the frame index (u64 LE) and three f64 LE.
/// A cache written at another fps or size is ignored.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    path: Option<PathBuf>,
    fps: f64,
    size: u32,
    entries: BTreeMap<usize, [f64; 3]>,
    dirty: bool,
}

impl FeatureCache {
    pub fn in_memory(fps: f64, size: u32) -> FeatureCache {
        FeatureCache {
            path: None,
            fps,
            size,
            entries: BTreeMap::new(),
            dirty: false,
        }
    }

    pub fn open(path: &Path, fps: f64, size: u32) -> Result<FeatureCache> {
        let mut cache = FeatureCache::in_memory(fps, size);
        cache.path = Some(path.to_path_buf());
        let mut bytes = Vec::new();
        match std::fs::File::open(path) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(Error::io(path, e)),
        }
        if let Some(entries) = parse(&bytes, fps, size) {
            cache.entries = entries;
        } else {
            tracing::debug!("ignoring stale feature cache {}", path.display());
        }
        Ok(cache)
    }

    pub fn get(&self, frame_idx: usize) -> Option<FrameFeature> {
        self.entries.get(&frame_idx).map(|&hsv_mean| FrameFeature { frame_idx, hsv_mean })
    }

    pub fn insert(&mut self, f: FrameFeature) {
        self.entries.insert(f.frame_idx, f.hsv_mean);
        self.dirty = true;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.entries.len() * RECORD);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.fps.to_le_bytes());
        out.extend_from_slice(&self.size.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (&k, v) in &self.entries {
            out.extend_from_slice(&(k as u64).to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Writes the file if anything changed since it was opened.
    pub fn save(&mut self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        if !self.dirty {
            return Ok(());
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))?;
        self.dirty = false;
        Ok(())
    }
}

fn parse(bytes: &[u8], fps: f64, size: u32) -> Option<BTreeMap<usize, [f64; 3]>> {
    let f64_at = |o: usize| Some(f64::from_le_bytes(bytes.get(o..o + 8)?.try_into().ok()?));
    let u64_at = |o: usize| Some(u64::from_le_bytes(bytes.get(o..o + 8)?.try_into().ok()?));
    if bytes.get(..4)? != MAGIC {
        return None;
    }
    if f64_at(4)? != fps || u32::from_le_bytes(bytes.get(12..16)?.try_into().ok()?) != size {
        return None;
    }
    let n = u64_at(16)? as usize;
    if bytes.len() != 24 + n.checked_mul(RECORD)? {
        return None;
    }
    let mut out = BTreeMap::new();
    for i in 0..n {
        let o = 24 + i * RECORD;
        out.insert(u64_at(o)? as usize, [f64_at(o + 8)?, f64_at(o + 16)?, f64_at(o + 24)?]);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.bin");
        let mut c = FeatureCache::open(&path, 24.0, 32).unwrap();
        assert!(c.is_empty());
        c.insert(FrameFeature { frame_idx: 7, hsv_mean: [1.0, 2.5, 255.0] });
        c.insert(FrameFeature { frame_idx: 3, hsv_mean: [0.0, 0.0, 0.0] });
        c.save().unwrap();
        let back = FeatureCache::open(&path, 24.0, 32).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.get(7).unwrap().hsv_mean, [1.0, 2.5, 255.0]);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 24 + 2 * 32);
    }

    #[test]
    fn other_settings_or_garbage_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.bin");
        let mut c = FeatureCache::open(&path, 24.0, 32).unwrap();
        c.insert(FrameFeature { frame_idx: 1, hsv_mean: [1.0; 3] });
        c.save().unwrap();
        assert!(FeatureCache::open(&path, 25.0, 32).unwrap().is_empty());
        std::fs::write(&path, b"junk").unwrap();
        assert!(FeatureCache::open(&path, 24.0, 32).unwrap().is_empty());
    }
}
