//! Content-addressed on-disk response cache.
//!
//! Entries live at `<dir>/<first two hex digits>/<sha256 hex>.json` and are
//! written atomically. Nothing is ever evicted.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::BackendError;

/// SHA-256 of the canonical JSON encoding of `[backend_id, model_name, payload]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn new(backend_id: &str, model_name: &str, payload: &Value) -> Self {
        // serde_json maps keep keys sorted, so this encoding is canonical.
        let canonical = serde_json::to_vec(&serde_json::json!([backend_id, model_name, payload]))
            .expect("JSON values always serialize");
        Self(hex::encode(Sha256::digest(&canonical)))
    }

    pub fn as_hex(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, BackendError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| BackendError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(&key.0[..2]).join(format!("{}.json", key.0))
    }

    pub fn get<T: DeserializeOwned>(&self, key: &CacheKey) -> Result<Option<T>, BackendError> {
        match fs::read(self.path(key)) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| BackendError::Cache(format!("corrupt entry {}: {e}", key.0))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(BackendError::Cache(e.to_string())),
        }
    }

    pub fn put<T: Serialize>(&self, key: &CacheKey, value: &T) -> Result<(), BackendError> {
        let path = self.path(key);
        let parent = path.parent().expect("entry paths have a parent");
        let err = |e: std::io::Error| BackendError::Cache(e.to_string());
        fs::create_dir_all(parent).map_err(err)?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(err)?;
        serde_json::to_writer(&mut tmp, value).map_err(|e| BackendError::Cache(e.to_string()))?;
        tmp.write_all(b"\n").map_err(err)?;
        tmp.persist(&path).map_err(|e| err(e.error))?;
        Ok(())
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .into_iter()
            .flatten()
            .flatten()
            .filter(|d| d.path().is_dir())
            .map(|d| fs::read_dir(d.path()).map(|r| r.count()).unwrap_or(0))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_content_addressed() {
        let a = CacheKey::new("b", "m", &json!({"text": "x", "k": 1}));
        let b = CacheKey::new("b", "m", &json!({"k": 1, "text": "x"}));
        assert_eq!(a, b);
        assert_ne!(a, CacheKey::new("b", "m", &json!({"text": "x ", "k": 1})));
        assert_ne!(a, CacheKey::new("b", "m2", &json!({"text": "x", "k": 1})));
        assert_ne!(a, CacheKey::new("b2", "m", &json!({"text": "x", "k": 1})));
        assert_eq!(a.as_hex().len(), 64);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = CacheKey::new("b", "m", &json!("hello"));
        assert_eq!(cache.get::<Vec<f64>>(&key).unwrap(), None);
        cache.put(&key, &vec![0.5, 0.25]).unwrap();
        assert_eq!(cache.get::<Vec<f64>>(&key).unwrap(), Some(vec![0.5, 0.25]));
        assert_eq!(cache.len(), 1);
        assert!(dir.path().join(&key.as_hex()[..2]).join(format!("{}.json", key.as_hex())).exists());
    }
}
