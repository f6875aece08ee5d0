//! Pipeline configuration: TOML file, then environment, then flags.

use std::path::{Path, PathBuf};

use lyricsense_core::corpus::{ColumnMapping, CurationConfig};
use lyricsense_core::regressor::{RegressorKind, RegressorSpec};
use lyricsense_model::encoder::DEFAULT_MAX_LEN;
use lyricsense_model::{SyntheticCheckpoint, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw corpus CSV; the bundled synthetic fixture is used when unset.
    pub corpus: Option<PathBuf>,
    pub data_dir: PathBuf,
    pub model_dir: PathBuf,
    pub reports_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: None,
            data_dir: "data".into(),
            model_dir: "models".into(),
            reports_dir: "reports".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub max_len: usize,
    pub batch_size: usize,
}

impl Default for EncoderSection {
    fn default() -> Self {
        Self {
            max_len: DEFAULT_MAX_LEN,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub port: u16,
    pub body_limit: usize,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            port: lyricsense_service::DEFAULT_PORT,
            body_limit: lyricsense_service::DEFAULT_BODY_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; copied into every stochastic step.
    pub seed: u64,
    pub paths: Paths,
    pub columns: ColumnMapping,
    pub curation: CurationConfig,
    pub encoder: EncoderSection,
    pub train: TrainConfig,
    pub checkpoint: SyntheticCheckpoint,
    /// Model written by `train-year`.
    pub year_regressor: RegressorSpec,
    /// Models compared by `benchmark-year`.
    pub regressors: Vec<RegressorSpec>,
    pub service: ServiceSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            paths: Paths::default(),
            columns: ColumnMapping::default(),
            curation: CurationConfig::default(),
            encoder: EncoderSection::default(),
            train: TrainConfig::default(),
            checkpoint: SyntheticCheckpoint::default(),
            year_regressor: RegressorSpec::new(RegressorKind::SvrLinear),
            regressors: RegressorSpec::defaults(0),
            service: ServiceSection::default(),
        }
    }
}

/// Values given on the command line; each one wins over file and environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, Failure> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::new("config", format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Failure::new("config", format!("{}: {e}", p.display())))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(dir) = std::env::var_os("DATA_DIR") {
            cfg.paths.data_dir = dir.into();
        }
        if let Some(dir) = std::env::var_os("MODEL_DIR") {
            cfg.paths.model_dir = dir.into();
        }
        if let Some(seed) = overrides.seed {
            cfg.seed = seed;
        }
        if let Some(c) = &overrides.corpus {
            cfg.paths.corpus = Some(c.clone());
        }
        cfg.propagate_seed();
        cfg.validate()?;
        Ok(cfg)
    }

    fn propagate_seed(&mut self) {
        self.train.seed = self.seed;
        self.checkpoint.seed = self.seed;
        self.year_regressor.seed = self.seed;
        for r in &mut self.regressors {
            r.seed = self.seed;
        }
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(c) = &self.paths.corpus {
            if !c.is_file() {
                return Err(Failure::new("config", format!("corpus {} does not exist", c.display())));
            }
        }
        if self.encoder.batch_size == 0 {
            return Err(Failure::new("config", "encoder.batch_size must be positive"));
        }
        self.train.validate()?;
        for r in self.regressors.iter().chain(std::iter::once(&self.year_regressor)) {
            r.params()?;
        }
        Ok(())
    }

    /// SHA-256 of the resolved configuration as JSON.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).unwrap_or_default();
        hex::encode(Sha256::digest(json))
    }

    pub fn datasets_dir(&self) -> PathBuf {
        self.paths.data_dir.join("datasets")
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.paths.data_dir.join("cache")
    }

    pub fn encoder_dir(&self) -> PathBuf {
        self.paths.model_dir.join("encoder")
    }
}
