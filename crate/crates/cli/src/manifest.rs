//! `manifest.json`: what a run was asked to do and what it wrote.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{io_err, CliError};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// The resolved configuration as TOML; feeding it back with `--config`
    /// reproduces the run.
    pub config: String,
    pub versions: Versions,
    pub seeds: Vec<u64>,
    pub files: Vec<FileEntry>,
    pub warnings: Vec<String>,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub stochstab: String,
    pub cli: String,
}

/// Collects output files while a command runs; [`Recorder::finish`] writes
/// the manifest after everything else.
pub struct Recorder {
    dir: PathBuf,
    command: String,
    config: RunConfig,
    seeds: Vec<u64>,
    files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub truncated: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Recorder {
    pub fn new(dir: &Path, command: &str, config: RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.into(),
            config,
            seeds: Vec::new(),
            files: Vec::new(),
            warnings: Vec::new(),
            truncated: false,
        })
    }

    pub fn seed(&mut self, seed: u64) {
        if !self.seeds.contains(&seed) {
            self.seeds.push(seed);
        }
    }

    pub fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    /// Write `name` inside the output directory and register it.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(io_err(&path))?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let mut files = Vec::new();
        for name in &self.files {
            let path = self.dir.join(name);
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            files.push(FileEntry {
                path: name.to_string_lossy().into_owned(),
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
            });
        }
        let config = toml::to_string(&self.config)
            .map_err(|e| CliError::Numeric(format!("cannot serialize config: {e}")))?;
        let manifest = RunManifest {
            command: self.command,
            config,
            versions: Versions {
                stochstab: stochstab_version().into(),
                cli: env!("CARGO_PKG_VERSION").into(),
            },
            seeds: self.seeds,
            files,
            warnings: self.warnings,
            truncated: self.truncated,
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Numeric(format!("cannot serialize manifest: {e}")))?;
        let path = self.dir.join(FILE_NAME);
        std::fs::write(&path, json + "\n").map_err(io_err(&path))?;
        Ok(manifest)
    }
}

fn stochstab_version() -> &'static str {
    // both crates share the workspace version
    env!("CARGO_PKG_VERSION")
}
