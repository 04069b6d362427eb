//! Run manifests written next to every output artifact.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the effective configuration's canonical JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C, seeds: serde_json::Value) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        // serde_json maps are sorted, so this serialization is canonical.
        let config_hash = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        Ok(Self {
            tool: "uc-screen",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash,
            config,
            seeds,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(mut self, path: &Path) -> Result<Self> {
        self.inputs.push(digest(path)?);
        Ok(self)
    }

    /// Record `outputs` (already written) and write the manifest beside the first.
    pub fn write(mut self, outputs: &[&Path]) -> Result<PathBuf> {
        for p in outputs {
            self.outputs.push(digest(p)?);
        }
        let target = manifest_path(outputs.first().context("manifest needs an output")?);
        fs::write(&target, serde_json::to_string_pretty(&self)? + "\n")
            .with_context(|| format!("writing {}", target.display()))?;
        Ok(target)
    }
}
