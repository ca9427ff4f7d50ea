//! Run manifests: what was run, with which inputs, and when.

use std::path::Path;

use bssvol_core::{Error, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical JSON of `inputs` and the command name.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub wall_seconds: f64,
    /// Everything that affects the output, including hashes of input files.
    pub inputs: Value,
}

/// Hex SHA-256 of `command` and the canonical (key-sorted) JSON of `inputs`.
pub fn config_hash(command: &str, inputs: &Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(inputs.to_string().as_bytes());
    hex::encode(h.finalize())
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Started when created; [`ManifestClock::finish`] produces the manifest.
#[derive(Debug, Clone)]
pub struct ManifestClock {
    command: String,
    started: DateTime<Utc>,
}

impl ManifestClock {
    pub fn start(command: &str) -> Self {
        ManifestClock {
            command: command.to_string(),
            started: Utc::now(),
        }
    }

    pub fn finish(self, inputs: Value, seed: Option<u64>) -> RunManifest {
        let finished = Utc::now();
        let wall = (finished - self.started).num_milliseconds() as f64 / 1000.0;
        RunManifest {
            config_hash: config_hash(&self.command, &inputs),
            command: self.command,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: stamp(self.started),
            finished: stamp(finished),
            wall_seconds: wall,
            inputs,
        }
    }
}
