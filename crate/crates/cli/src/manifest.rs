use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::{Check, CommandOutput, Experiment, Format, Status};
use crate::error::{CliError, Result};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to re-run an experiment and check its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub experiment: Experiment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    /// SHA-256 of `config`.
    pub config_sha256: String,
    /// The resolved configuration (seed override applied) in canonical TOML.
    pub config: String,
    pub seed: u64,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub versions: BTreeMap<String, String>,
    pub wall_clock_secs: f64,
    pub status: Status,
    pub checks: Vec<Check>,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn file_name(experiment: Experiment) -> String {
        format!("{}{MANIFEST_SUFFIX}", experiment.name())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_slice(&text)?)
    }
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("gbdsde".to_string(), gbdsde::VERSION.to_string()),
        ("gbdsde-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ])
}

pub fn output_entries(output: &CommandOutput) -> Vec<OutputEntry> {
    output
        .artifacts
        .iter()
        .map(|a| OutputEntry { path: a.name.clone(), bytes: a.bytes.len() as u64, sha256: sha256_hex(&a.bytes) })
        .collect()
}

/// Writes the artifacts into `dir` in order, then the manifest.
pub fn write_run(dir: &Path, output: &CommandOutput, manifest: &RunManifest) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for a in &output.artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(|e| CliError::io(&path, e))?;
    }
    let path = dir.join(RunManifest::file_name(manifest.experiment));
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Outputs whose bytes on disk no longer match the manifest.
pub fn verify_outputs(dir: &Path, manifest: &RunManifest) -> Vec<String> {
    manifest
        .outputs
        .iter()
        .filter(|o| match fs::read(dir.join(&o.path)) {
            Ok(bytes) => sha256_hex(&bytes) != o.sha256,
            Err(_) => true,
        })
        .map(|o| o.path.clone())
        .collect()
}

/// Manifests in `dir`, sorted by file name.
pub fn find_manifests(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(MANIFEST_SUFFIX)) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
