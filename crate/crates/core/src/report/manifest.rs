//! Run manifests: the inputs that determine a run, and their digest.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::REPORT_SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
}

/// Everything that determines a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    /// Input files by role with their SHA-256.
    pub inputs: Vec<ManifestEntry>,
    pub master_seed: u64,
    /// `backend_id:model_name` for every backend used.
    pub backends: Vec<String>,
    /// The run configuration as JSON.
    pub config: Value,
}

impl Manifest {
    pub fn new(inputs: Vec<ManifestEntry>, master_seed: u64, backends: Vec<String>, config: Value) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            master_seed,
            backends,
            config,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), 0, Vec::new(), Value::Null)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(&serde_json::to_value(self).expect("manifest serializes"))
            .expect("JSON values serialize");
        hex::encode(Sha256::digest(&canonical))
    }

    /// First 16 hex digits of the digest.
    pub fn run_id(&self) -> String {
        self.digest()[..16].to_string()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
