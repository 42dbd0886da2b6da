//! Run manifests written next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostInfo {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub input_digests: BTreeMap<String, String>,
    pub output_digests: BTreeMap<String, String>,
    pub wall_time_s: f64,
    pub finished_unix_s: u64,
    pub host: HostInfo,
    /// Free-form per-command notes (solver statistics, reference counts).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, serde_json::Value>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Collects digests while a command runs and writes the manifest at the end.
pub struct Recorder {
    start: Instant,
    seed: Option<u64>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl Recorder {
    pub fn new(seed: Option<u64>) -> Self {
        Self { start: Instant::now(), seed, inputs: BTreeMap::new(), outputs: BTreeMap::new(), notes: BTreeMap::new() }
    }

    pub fn read_input(&mut self, path: &Path) -> CliResult<String> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(text.as_bytes()));
        Ok(text)
    }

    pub fn write_output(&mut self, path: &Path, contents: &str) -> CliResult<()> {
        std::fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
        self.outputs.insert(path.display().to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    /// Writes `<primary>.manifest.json`.
    pub fn finish(self, primary: &Path) -> CliResult<()> {
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digests: self.inputs,
            output_digests: self.outputs,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            finished_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            host: HostInfo {
                os: std::env::consts::OS.to_string(),
                arch: std::env::consts::ARCH.to_string(),
                cpus: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            },
            notes: self.notes,
        };
        let path = manifest_path(primary);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}
