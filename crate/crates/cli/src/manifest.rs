use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Record of one run, sufficient to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name, with any config file expanded.
    pub argv: Vec<String>,
    /// Directory relative paths were resolved against.
    pub base_dir: String,
    /// Hash of `argv`, i.e. of the effective configuration.
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_file: Option<FileHash>,
    pub seeds: BTreeMap<String, u64>,
    pub threads: Option<usize>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, Value>,
    pub created_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<FileHash> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(FileHash {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Collects what a command read and wrote while it runs.
#[derive(Debug, Default)]
pub struct Recorder {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seeds: BTreeMap<String, u64>,
    pub notes: BTreeMap<String, Value>,
    /// Where the manifest goes unless overridden.
    pub manifest_dir: Option<PathBuf>,
}

impl Recorder {
    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_string(), seed);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.notes.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl Manifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
