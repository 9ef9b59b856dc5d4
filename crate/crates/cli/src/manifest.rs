//! Run provenance. Every successful command prints one manifest as the last
//! stdout line: the argv, a digest of the fully resolved config, the seed,
//! the crate version and a digest of every file the run wrote.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use spikebar_core::config::ModelConfig;

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One file written by the run.
#[derive(Debug, Serialize)]
pub struct OutputRef {
    pub path: String,
    pub sha256: String,
}

/// Provenance record for one invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// The invocation, with argv[0] reduced to the binary name.
    pub command: String,
    /// SHA-256 of the canonical rendering of the resolved config.
    pub config_sha256: String,
    pub seed: u64,
    pub version: &'static str,
    /// Files written, in write order.
    pub outputs: Vec<OutputRef>,
}

impl RunManifest {
    pub fn new(argv: &[String], cfg: &ModelConfig) -> Self {
        let name = argv
            .first()
            .map(|a| {
                Path::new(a)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| a.clone())
            })
            .unwrap_or_else(|| "spikebar".into());
        let command = std::iter::once(name)
            .chain(argv.iter().skip(1).cloned())
            .collect::<Vec<_>>()
            .join(" ");
        RunManifest {
            command,
            config_sha256: sha256_hex(cfg.canonical_toml().as_bytes()),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.push(OutputRef {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serializes")
    }
}
