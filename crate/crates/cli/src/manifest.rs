//! Run manifests: enough metadata to reproduce a command's numeric output
//! (identical manifest minus timestamp + identical inputs means bit-identical
//! results).

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CmdError;

pub struct RunManifest {
    pub command: &'static str,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// FNV-1a hash of the effective configuration string.
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config_hash: String::new(),
            seed: None,
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn config(mut self, config: &str) -> Self {
        self.config_hash = format!("fnv1a64:{:016x}", fnv1a64(config.as_bytes()));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), CmdError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let json = serde_json::json!({
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp_unix": timestamp,
        });
        let text = serde_json::to_string_pretty(&json).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| CmdError::io(&path.display().to_string(), &e))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        // Same config -> same hash; different config -> different hash.
        let a = RunManifest::new("metrics").config("threshold=0.01");
        let b = RunManifest::new("metrics").config("threshold=0.01");
        let c = RunManifest::new("metrics").config("threshold=0.02");
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
    }
}
