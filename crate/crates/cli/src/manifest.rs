//! Per-run manifest: what ran, with which configuration, reading and writing what.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::failure::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub lyricsense: &'static str,
    pub candle: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub task: Option<String>,
    pub seed: u64,
    pub config_digest: String,
    pub config: PipelineConfig,
    pub versions: Versions,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub summary: serde_json::Value,
}

fn record(path: &Path) -> Result<FileRecord, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
    Ok(FileRecord {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

impl RunManifest {
    pub fn begin(command: &str, task: Option<&str>, config: &PipelineConfig) -> Self {
        Self {
            command: command.into(),
            task: task.map(str::to_string),
            seed: config.seed,
            config_digest: config.digest(),
            config: config.clone(),
            versions: Versions {
                lyricsense: env!("CARGO_PKG_VERSION"),
                candle: "0.11",
            },
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), Failure> {
        if path.is_file() {
            self.inputs.push(record(path)?);
        }
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), Failure> {
        self.outputs.push(record(path)?);
        Ok(())
    }

    /// File name of this run's manifest, e.g. `curate-genre.run.json`.
    pub fn file_name(&self) -> String {
        match &self.task {
            Some(t) => format!("{}-{t}.run.json", self.command),
            None => format!("{}.run.json", self.command),
        }
    }

    pub fn finish(mut self, dir: &Path) -> Result<PathBuf, Failure> {
        self.finished_at = Some(chrono::Utc::now().to_rfc3339());
        fs::create_dir_all(dir).map_err(|e| Failure::new("io", format!("{}: {e}", dir.display())))?;
        let path = dir.join(self.file_name());
        fs::write(&path, serde_json::to_vec_pretty(&self)?)
            .map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
