//! Loads and cross-checks the encoder, both classifiers and the year regressor.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lyricsense_core::analytics::{sentiment_score, Lexicon};
use lyricsense_core::corpus::{clean_lyrics, Task};
use lyricsense_model::checkpoint::{file_id, CONFIG_FILE};
use lyricsense_model::classifier::ARTIFACT_FILE;
use lyricsense_model::encoder::DEFAULT_MAX_LEN;
use lyricsense_model::year::YEAR_ARTIFACT_FILE;
use lyricsense_model::{Checkpoint, Classifier, Embed, Encoder, YearArtifact};

use crate::error::PredictError;
use crate::types::{GenrePrediction, ModelInfo, PredictionResult, SuccessPrediction};
use crate::Predictor;

/// Where each artifact lives.
#[derive(Debug, Clone, PartialEq)]
pub struct RegistryConfig {
    pub encoder_dir: PathBuf,
    pub genre_dir: PathBuf,
    pub success_dir: PathBuf,
    pub year_path: PathBuf,
    /// Paths were listed explicitly, so an absent artifact is a boot error
    /// instead of a missing model.
    pub strict: bool,
}

impl RegistryConfig {
    /// Standard layout under a model directory: `encoder/`, `genre/`,
    /// `success/` and `year/year_regressor.json`.
    pub fn from_model_dir(dir: &Path) -> Self {
        Self {
            encoder_dir: dir.join("encoder"),
            genre_dir: dir.join("genre"),
            success_dir: dir.join("success"),
            year_path: dir.join("year").join(YEAR_ARTIFACT_FILE),
            strict: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BootError {
    #[error("{task}: artifact not found at {path}")]
    NotFound { task: String, path: PathBuf },
    #[error("{task}: {message}")]
    Mismatch { task: String, message: String },
    #[error("{task}: failed to load: {source}")]
    Load {
        task: String,
        #[source]
        source: lyricsense_model::Error,
    },
}

impl BootError {
    fn load(task: &str, source: lyricsense_model::Error) -> Self {
        match source {
            lyricsense_model::Error::Mismatch(message) => BootError::Mismatch {
                task: task.into(),
                message,
            },
            source => BootError::Load {
                task: task.into(),
                source,
            },
        }
    }
}

/// Immutable set of loaded artifacts sharing one encoder.
pub struct Registry {
    encoder: Option<Encoder>,
    genre: Option<Classifier>,
    success: Option<Classifier>,
    year: Option<(YearArtifact, String)>,
    lexicon: Lexicon,
    missing: Vec<String>,
}

fn present(path: &Path, marker: &str, task: &str, strict: bool) -> Result<bool, BootError> {
    let found = path.join(marker).is_file() || (marker.is_empty() && path.is_file());
    if !found && strict {
        return Err(BootError::NotFound {
            task: task.into(),
            path: path.to_path_buf(),
        });
    }
    Ok(found)
}

fn check_classifier(c: &Classifier, task: Task, encoder: &Encoder) -> Result<(), BootError> {
    let name = task.as_str();
    if c.task() != task {
        return Err(BootError::Mismatch {
            task: name.into(),
            message: format!("artifact was trained for {}", c.task()),
        });
    }
    if c.hidden_size() != encoder.hidden_size() {
        return Err(BootError::Mismatch {
            task: name.into(),
            message: format!(
                "dimension mismatch: hidden size {} but the encoder has {}",
                c.hidden_size(),
                encoder.hidden_size()
            ),
        });
    }
    if c.base_checkpoint_id() != encoder.checkpoint_id() {
        return Err(BootError::Mismatch {
            task: name.into(),
            message: format!(
                "fine-tuned from {} but the encoder checkpoint is {}",
                c.base_checkpoint_id(),
                encoder.checkpoint_id()
            ),
        });
    }
    Ok(())
}

/// Loads every artifact named by `config`, failing on any inconsistency.
pub fn load_registry(config: &RegistryConfig) -> Result<Registry, BootError> {
    let strict = config.strict;
    let mut missing = Vec::new();
    if !present(&config.encoder_dir, CONFIG_FILE, "encoder", strict)? {
        log::warn!("no encoder checkpoint at {}", config.encoder_dir.display());
        return Ok(Registry {
            encoder: None,
            genre: None,
            success: None,
            year: None,
            lexicon: Lexicon::bundled(),
            missing: vec!["genre".into(), "success".into(), "year".into()],
        });
    }

    let year = if present(&config.year_path, "", "year", strict)? {
        let artifact = YearArtifact::load(&config.year_path).map_err(|e| BootError::load("year", e))?;
        let id = file_id(&config.year_path).map_err(|e| BootError::load("year", e))?;
        Some((artifact, id))
    } else {
        missing.push("year".to_string());
        None
    };
    let checkpoint = Checkpoint::load(&config.encoder_dir).map_err(|e| BootError::load("encoder", e))?;
    let max_len = year.as_ref().map_or(DEFAULT_MAX_LEN, |(y, _)| y.max_len);
    let encoder = Encoder::new(&checkpoint, max_len).map_err(|e| BootError::load("encoder", e))?;
    if let Some((y, _)) = &year {
        y.check_encoder(&encoder).map_err(|e| BootError::load("year", e))?;
    }

    let mut classifier = |task: Task, dir: &Path| -> Result<Option<Classifier>, BootError> {
        if !present(dir, ARTIFACT_FILE, task.as_str(), strict)? {
            missing.push(task.as_str().to_string());
            return Ok(None);
        }
        let c = Classifier::load(dir).map_err(|e| BootError::load(task.as_str(), e))?;
        check_classifier(&c, task, &encoder)?;
        Ok(Some(c))
    };
    let genre = classifier(Task::Genre, &config.genre_dir)?;
    let success = classifier(Task::Success, &config.success_dir)?;
    missing.sort();
    Ok(Registry {
        encoder: Some(encoder),
        genre,
        success,
        year,
        lexicon: Lexicon::bundled(),
        missing,
    })
}

impl Registry {
    pub fn missing(&self) -> &[String] {
        &self.missing
    }

    fn unavailable(&self) -> PredictError {
        PredictError::Internal(format!("models not loaded: {}", self.missing.join(", ")))
    }
}

impl Predictor for Registry {
    fn checkpoint_id(&self) -> Option<String> {
        self.encoder.as_ref().map(|e| e.checkpoint_id().to_string())
    }

    fn models(&self) -> Vec<ModelInfo> {
        let mut out = Vec::new();
        for c in [&self.genre, &self.success].into_iter().flatten() {
            out.push(ModelInfo {
                task: c.task().to_string(),
                artifact_id: c.artifact_id().unwrap_or_default().to_string(),
                classes: Some(c.classes().to_vec()),
                base_checkpoint_id: c.base_checkpoint_id().to_string(),
            });
        }
        if let Some((y, id)) = &self.year {
            out.push(ModelInfo {
                task: "year".into(),
                artifact_id: id.clone(),
                classes: None,
                base_checkpoint_id: y.checkpoint_id.clone(),
            });
        }
        out
    }

    fn predict(&self, lyrics: &str) -> Result<PredictionResult, PredictError> {
        let cleaned = clean_lyrics(lyrics);
        if cleaned.is_empty() {
            return Err(PredictError::NoContent);
        }
        let (Some(encoder), Some(genre), Some(success), Some((year, _))) = (&self.encoder, &self.genre, &self.success, &self.year)
        else {
            return Err(self.unavailable());
        };
        let g = genre.predict_probs(&cleaned)?;
        let s = success.predict_probs(&cleaned)?;
        let y = year.predict(encoder, &cleaned)?;
        let sentiment = sentiment_score(&cleaned, &self.lexicon).map_err(|e| PredictError::Internal(e.to_string()))?;
        let model_ids: BTreeMap<String, String> = self.models().into_iter().map(|m| (m.task, m.artifact_id)).collect();
        Ok(PredictionResult {
            genre: GenrePrediction {
                label: g.label,
                probs: g.probs,
            },
            success: SuccessPrediction {
                label: s.label,
                prob_success: s.probs.get("success").copied().unwrap_or(0.0),
            },
            year: y,
            sentiment,
            model_ids,
            latency_ms: 0.0,
        })
    }
}
