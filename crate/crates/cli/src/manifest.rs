//! Run manifests: every command writes a manifest recording its parameters
//! and the SHA-256 of each input and output, so downstream commands can
//! refuse mismatched lineages.

use crate::error::{CliError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Every parameter of the run,
    /// serialized with sorted keys for byte-stable output.
    pub parameters: serde_json::Value,
    pub inputs: BTreeMap<String, FileRef>,
    pub outputs: BTreeMap<String, FileRef>,
    /// Hashes propagated across pipeline stages (e.g. the ground-truth
    /// scene), used by lineage checks.
    pub lineage: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, parameters: serde_json::Value) -> Self {
        Self {
            tool: "cassi".into(),
            command: command.into(),
            seed,
            parameters,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            lineage: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(
            name.into(),
            FileRef {
                path: path.display().to_string(),
                sha256: hash_file(path)?,
            },
        );
        Ok(())
    }

    pub fn add_output(&mut self, name: &str, path: &Path) -> Result<()> {
        self.outputs.insert(
            name.into(),
            FileRef {
                path: path.display().to_string(),
                sha256: hash_file(path)?,
            },
        );
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Validation(format!("serializing manifest: {e}")))?;
        fs::write(path, text + "\n").map_err(CliError::io(format!("writing {}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: malformed manifest: {e}", path.display())))
    }

    /// Loads the manifest sitting next to `artifact`, if present.
    pub fn load_sibling(artifact: &Path) -> Option<Self> {
        let dir = artifact.parent()?;
        let candidate = dir.join(MANIFEST_NAME);
        if candidate.is_file() {
            Manifest::load(&candidate).ok()
        } else {
            None
        }
    }
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(CliError::io(format!("hashing {}", path.display())))?;
    Ok(hash_bytes(&bytes))
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
