use std::path::Path;

use candle_core::Tensor;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint::Checkpoint;
use crate::distilbert::{mean_pool, DistilBert};
use crate::error::{Error, Result};
use crate::tokenizer::WordPiece;

pub const MIN_MAX_LEN: usize = 8;
pub const DEFAULT_MAX_LEN: usize = 256;

/// Hex SHA-256 of the text bytes.
pub fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub input_ids: Vec<u32>,
    pub attention_mask: Vec<u8>,
    pub text_hash: String,
    /// Set when content subwords were dropped to fit `max_len`.
    pub truncated: bool,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.input_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_ids.is_empty()
    }

    /// Number of mask-1 positions.
    pub fn real_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }
}

/// `[CLS] subwords [SEP]`, truncated to `max_len - 2` subwords and padded to `max_len`.
pub fn encode_text(tokenizer: &WordPiece, text: &str, max_len: usize, max_positions: usize) -> Result<TokenSequence> {
    let upper = max_positions.min(512);
    if !(MIN_MAX_LEN..=upper).contains(&max_len) {
        return Err(Error::InvalidInput(format!(
            "max_len {max_len} outside [{MIN_MAX_LEN}, {upper}]"
        )));
    }
    let sp = tokenizer.special();
    let mut pieces = tokenizer.tokenize(text);
    let truncated = pieces.len() > max_len - 2;
    pieces.truncate(max_len - 2);
    let mut input_ids = Vec::with_capacity(max_len);
    input_ids.push(sp.cls);
    input_ids.extend(pieces);
    input_ids.push(sp.sep);
    let mut attention_mask = vec![1u8; input_ids.len()];
    input_ids.resize(max_len, sp.pad);
    attention_mask.resize(max_len, 0);
    Ok(TokenSequence {
        input_ids,
        attention_mask,
        text_hash: text_hash(text),
        truncated,
    })
}

/// Final-layer token vectors for one sequence, `s × H` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub token_embeddings: Vec<Vec<f32>>,
    pub hidden_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
    pub source_hash: String,
}

/// Anything that maps texts to fixed-width vectors under a stable checkpoint id.
pub trait Embed {
    fn checkpoint_id(&self) -> &str;
    fn hidden_size(&self) -> usize;
    fn max_len(&self) -> usize;
    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;
}

/// Tokenizer plus frozen backbone used for feature extraction.
#[derive(Debug, Clone)]
pub struct Encoder {
    tokenizer: WordPiece,
    model: DistilBert,
    checkpoint_id: String,
    max_len: usize,
    max_positions: usize,
}

impl Encoder {
    pub fn new(checkpoint: &Checkpoint, max_len: usize) -> Result<Self> {
        let model = DistilBert::new(&checkpoint.config, &checkpoint.weights)
            .map_err(|e| Error::checkpoint(&checkpoint.id, e.to_string()))?;
        let max_positions = checkpoint.config.max_len();
        if !(MIN_MAX_LEN..=max_positions).contains(&max_len) {
            return Err(Error::InvalidInput(format!(
                "max_len {max_len} outside [{MIN_MAX_LEN}, {max_positions}]"
            )));
        }
        Ok(Self {
            tokenizer: checkpoint.tokenizer.clone(),
            model,
            checkpoint_id: checkpoint.id.clone(),
            max_len,
            max_positions,
        })
    }

    pub fn load(dir: &Path, max_len: usize) -> Result<Self> {
        Self::new(&Checkpoint::load(dir)?, max_len)
    }

    pub fn tokenizer(&self) -> &WordPiece {
        &self.tokenizer
    }

    pub fn encode(&self, text: &str) -> Result<TokenSequence> {
        encode_text(&self.tokenizer, text, self.max_len, self.max_positions)
    }

    pub fn encode_with(&self, text: &str, max_len: usize) -> Result<TokenSequence> {
        encode_text(&self.tokenizer, text, max_len, self.max_positions)
    }

    // Trims shared trailing padding; mask-aware attention makes it inert.
    fn hidden(&self, batch: &[TokenSequence]) -> Result<(Tensor, Tensor)> {
        let width = batch.iter().map(TokenSequence::real_len).max().unwrap_or(0).max(1);
        let ids: Vec<Vec<u32>> = batch.iter().map(|t| t.input_ids[..width.min(t.len())].to_vec()).collect();
        let masks: Vec<Vec<u8>> = batch.iter().map(|t| t.attention_mask[..width.min(t.len())].to_vec()).collect();
        let (ids, mask) = self.model.batch_tensors(&ids, &masks)?;
        let hidden = self.model.forward(&ids, &mask)?;
        Ok((hidden, mask))
    }

    /// Raw final-layer vectors, one matrix per sequence covering its full length.
    pub fn encoder_output(&self, batch: &[TokenSequence]) -> Result<Vec<EncoderOutput>> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let s = batch[0].len();
        let ids: Vec<Vec<u32>> = batch.iter().map(|t| t.input_ids.clone()).collect();
        let masks: Vec<Vec<u8>> = batch.iter().map(|t| t.attention_mask.clone()).collect();
        let (ids, mask) = self.model.batch_tensors(&ids, &masks)?;
        let hidden = self.model.forward(&ids, &mask)?.to_vec3::<f32>()?;
        hidden
            .into_iter()
            .map(|rows| {
                if rows.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("encoder output"));
                }
                debug_assert_eq!(rows.len(), s);
                Ok(EncoderOutput {
                    token_embeddings: rows,
                    hidden_size: self.model.hidden_size(),
                })
            })
            .collect()
    }

    /// Mean-pooled vectors over mask-1 positions.
    pub fn embed(&self, batch: &[TokenSequence]) -> Result<Vec<EmbeddingVector>> {
        if batch.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let (hidden, mask) = self.hidden(batch)?;
        let pooled = mean_pool(&hidden, &mask)?.to_vec2::<f32>()?;
        pooled
            .into_iter()
            .zip(batch)
            .map(|(values, t)| {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("pooled embedding"));
                }
                Ok(EmbeddingVector {
                    values,
                    source_hash: t.text_hash.clone(),
                })
            })
            .collect()
    }
}

impl Embed for Encoder {
    fn checkpoint_id(&self) -> &str {
        &self.checkpoint_id
    }

    fn hidden_size(&self) -> usize {
        self.model.hidden_size()
    }

    fn max_len(&self) -> usize {
        self.max_len
    }

    fn embed_texts(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let seqs = texts.iter().map(|t| self.encode(t)).collect::<Result<Vec<_>>>()?;
        self.embed(&seqs)
    }
}
