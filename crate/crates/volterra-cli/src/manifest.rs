//! Run manifests: config hash, seed, outputs and per-check verdicts.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub replicas: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
}

impl Manifest {
    pub fn new(kind: &str, config_toml: &str, seed: u64, replicas: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(config_toml.as_bytes());
        Self {
            kind: kind.to_string(),
            config_hash: format!("{:x}", hasher.finalize()),
            seed,
            replicas,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, id: &str, passed: bool, detail: String) {
        self.checks.push(Check { id: id.to_string(), passed, detail });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
