//! File access and run manifests.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use parmor_core::OpStats;

use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub cmdline: Vec<String>,
    pub config: Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub seed: Option<u64>,
    pub stats: OpStats,
    pub wall_time_s: f64,
    pub timestamp_unix_s: u64,
}

/// Collects inputs and outputs over one command run.
pub struct Run {
    command: String,
    started: Instant,
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
    out: Option<PathBuf>,
}

impl Run {
    pub fn new(command: &str, out: Option<PathBuf>) -> Self {
        Self {
            command: command.to_string(),
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            out,
        }
    }

    /// Reads an input file and records its hash.
    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let text = read_text(path)?;
        self.inputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(text)
    }

    pub fn note_input(&mut self, path: &Path) -> CliResult<()> {
        self.read(path).map(|_| ())
    }

    /// Writes the primary artifact to `--out`, or stdout without one.
    pub fn emit(&mut self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(p) => {
                write_file(p, text)?;
                self.outputs.push(FileHash {
                    path: p.display().to_string(),
                    sha256: sha256_hex(text.as_bytes()),
                });
            }
            None => {
                let mut so = std::io::stdout().lock();
                so.write_all(text.as_bytes())
                    .and_then(|_| so.flush())
                    .map_err(|e| CliError::Input(format!("stdout: {e}")))?;
                self.outputs.push(FileHash {
                    path: "-".into(),
                    sha256: sha256_hex(text.as_bytes()),
                });
            }
        }
        Ok(())
    }

    /// Writes a secondary artifact.
    pub fn emit_to(&mut self, path: &Path, text: &str) -> CliResult<()> {
        write_file(path, text)?;
        self.outputs.push(FileHash {
            path: path.display().to_string(),
            sha256: sha256_hex(text.as_bytes()),
        });
        Ok(())
    }

    /// Writes `<out>.manifest.json`, or one JSON line on stderr without `--out`.
    pub fn finish(self, config: Value, seed: Option<u64>, stats: OpStats) -> CliResult<()> {
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            cmdline: std::env::args().collect(),
            config,
            inputs: self.inputs,
            outputs: self.outputs,
            seed,
            stats,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            timestamp_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        match self.out {
            Some(p) => {
                let mut name = p.into_os_string();
                name.push(".manifest.json");
                write_file(Path::new(&name), &serde_json::to_string_pretty(&manifest)?)
            }
            None => {
                eprintln!("{}", serde_json::to_string(&manifest)?);
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
