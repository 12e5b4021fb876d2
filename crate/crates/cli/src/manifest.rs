//! Artifact directories: files plus a `manifest.json` holding the config echo and sha256 hashes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub nonrigorous: bool,
    pub config: RunConfig,
    /// File name to lowercase hex sha256.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

/// Artifact files collected in memory, then written together with the manifest.
#[derive(Default)]
pub struct Bundle {
    files: Vec<(String, Vec<u8>)>,
}

impl Bundle {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.add(name, json_bytes(value));
    }

    pub fn write(self, dir: &Path, command: &str, config: &RunConfig) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir)?;
        let mut files = BTreeMap::new();
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
            files.insert(name.clone(), sha256_hex(bytes));
        }
        let manifest = Manifest { command: command.into(), nonrigorous: config.problem.nonrigorous, config: config.clone(), files };
        fs::write(dir.join(MANIFEST), json_bytes(&manifest))?;
        Ok(dir.to_path_buf())
    }
}

/// Reads the manifest in `dir` and checks every listed hash.
pub fn verify(dir: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: unreadable manifest: {e}", dir.display())))?;
    for (name, want) in &manifest.files {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let got = sha256_hex(&bytes);
        if &got != want {
            return Err(CliError::Validation(format!("hash mismatch for {}: manifest {want}, file {got}", path.display())));
        }
    }
    Ok(manifest)
}
