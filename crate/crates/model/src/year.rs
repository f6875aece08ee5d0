//! Release-year regressor bound to the encoder that produced its features.

use std::path::Path;

use lyricsense_core::corpus::clean_lyrics;
use lyricsense_core::regressor::{predict_year, YearEstimate};
use lyricsense_core::YearRegressor;
use serde::{Deserialize, Serialize};

use crate::classifier::{read_json, write_json};
use crate::encoder::{Embed, Encoder};
use crate::error::{Error, Result};

pub const YEAR_ARTIFACT_FILE: &str = "year_regressor.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearArtifact {
    /// Encoder checkpoint whose pooled embeddings the regressor was fitted on.
    pub checkpoint_id: String,
    pub max_len: usize,
    pub regressor: YearRegressor,
}

impl YearArtifact {
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Fails unless `encoder` matches the checkpoint, width and `max_len` used in training.
    pub fn check_encoder(&self, encoder: &dyn Embed) -> Result<()> {
        if encoder.hidden_size() != self.regressor.hidden_size {
            return Err(Error::Mismatch(format!(
                "year regressor expects width {}, encoder yields {}",
                self.regressor.hidden_size,
                encoder.hidden_size()
            )));
        }
        if encoder.checkpoint_id() != self.checkpoint_id {
            return Err(Error::Mismatch(format!(
                "year regressor was fitted on {} but the encoder is {}",
                self.checkpoint_id,
                encoder.checkpoint_id()
            )));
        }
        if encoder.max_len() != self.max_len {
            return Err(Error::Mismatch(format!(
                "year regressor expects max_len {}, encoder uses {}",
                self.max_len,
                encoder.max_len()
            )));
        }
        Ok(())
    }

    /// Cleans, embeds and regresses one lyric.
    pub fn predict(&self, encoder: &Encoder, lyrics: &str) -> Result<YearEstimate> {
        self.check_encoder(encoder)?;
        let cleaned = clean_lyrics(lyrics);
        if cleaned.is_empty() {
            return Err(Error::NoContent);
        }
        let v = encoder.embed_texts(&[cleaned.as_str()])?.remove(0);
        let x: Vec<f64> = v.values.iter().map(|&f| f as f64).collect();
        Ok(predict_year(&self.regressor, &x)?)
    }
}
