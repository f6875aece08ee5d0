//! DistilBERT-style checkpoint directories: `config.json`, `vocab.txt` and
//! `model.safetensors`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tokenizer::{WordPiece, CLS, MASK, PAD, SEP, UNK};

pub const CONFIG_FILE: &str = "config.json";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const WEIGHTS_FILE: &str = "model.safetensors";

/// Architecture hyperparameters, read from a Hugging Face style `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default = "default_model_type")]
    pub model_type: String,
    pub vocab_size: usize,
    pub dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub hidden_dim: usize,
    pub max_position_embeddings: usize,
    #[serde(default = "default_activation")]
    pub activation: String,
    #[serde(default)]
    pub pad_token_id: u32,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default)]
    pub initializer_range: Option<f64>,
}

fn default_model_type() -> String {
    "distilbert".into()
}

fn default_activation() -> String {
    "gelu".into()
}

fn default_eps() -> f64 {
    1e-12
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.n_heads == 0 || !self.dim.is_multiple_of(self.n_heads) {
            return Err(Error::InvalidConfig(format!(
                "dim {} not divisible into {} heads",
                self.dim, self.n_heads
            )));
        }
        if self.n_layers == 0 || self.hidden_dim == 0 || self.max_position_embeddings < 8 {
            return Err(Error::InvalidConfig("degenerate architecture".into()));
        }
        if !matches!(self.activation.as_str(), "gelu" | "relu") {
            return Err(Error::InvalidConfig(format!("unsupported activation {}", self.activation)));
        }
        Ok(())
    }

    /// Longest sequence the position table supports, capped at 512.
    pub fn max_len(&self) -> usize {
        self.max_position_embeddings.min(512)
    }
}

/// Tensor names without the optional `distilbert.` prefix.
pub type Weights = BTreeMap<String, Tensor>;

/// A loaded checkpoint: architecture, tokenizer, weights and a content id.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub dir: PathBuf,
    pub config: ModelConfig,
    pub tokenizer: WordPiece,
    pub weights: Weights,
    /// `sha256:` plus the first 16 hex digits of the weights file digest.
    pub id: String,
}

pub fn file_id(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("sha256:{}", &hex::encode(Sha256::digest(&bytes))[..16]))
}

impl Checkpoint {
    pub fn load(dir: &Path) -> Result<Self> {
        let label = dir.display().to_string();
        for f in [CONFIG_FILE, VOCAB_FILE, WEIGHTS_FILE] {
            if !dir.join(f).is_file() {
                return Err(Error::checkpoint(&label, format!("missing {f}")));
            }
        }
        let weights_path = dir.join(WEIGHTS_FILE);
        let id = file_id(&weights_path)?;
        let text = fs::read_to_string(dir.join(CONFIG_FILE)).map_err(|e| Error::io(dir.join(CONFIG_FILE), e))?;
        let config: ModelConfig = serde_json::from_str(&text)
            .map_err(|e| Error::checkpoint(&id, format!("bad config.json: {e}")))?;
        config.validate()?;
        let tokenizer = WordPiece::load(&dir.join(VOCAB_FILE))?;
        if tokenizer.vocab_size() != config.vocab_size {
            return Err(Error::checkpoint(
                &id,
                format!("vocab.txt has {} tokens, config says {}", tokenizer.vocab_size(), config.vocab_size),
            ));
        }
        let raw: HashMap<String, Tensor> = candle_core::safetensors::load(&weights_path, &Device::Cpu)
            .map_err(|e| Error::checkpoint(&id, format!("unreadable weights: {e}")))?;
        let weights = raw
            .into_iter()
            .map(|(k, t)| {
                let k = k.strip_prefix("distilbert.").map(str::to_string).unwrap_or(k);
                Ok((k, t.to_dtype(DType::F32)?))
            })
            .collect::<Result<Weights>>()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
            tokenizer,
            weights,
            id,
        })
    }
}

/// Writes `config.json`, `vocab.txt` and the weights for a model directory.
pub fn save_model_dir(dir: &Path, config: &ModelConfig, tokenizer: &WordPiece, weights: &Weights) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cfg = serde_json::to_string_pretty(config)?;
    fs::write(dir.join(CONFIG_FILE), cfg).map_err(|e| Error::io(dir.join(CONFIG_FILE), e))?;
    tokenizer.save(&dir.join(VOCAB_FILE))?;
    save_weights(weights, &dir.join(WEIGHTS_FILE))
}

pub fn save_weights(weights: &Weights, path: &Path) -> Result<()> {
    let map: HashMap<&str, Tensor> = weights.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    candle_core::safetensors::save(&map, path)?;
    Ok(())
}

/// Shape of a randomly initialised checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCheckpoint {
    pub dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub hidden_dim: usize,
    pub max_position_embeddings: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for SyntheticCheckpoint {
    fn default() -> Self {
        Self {
            dim: 64,
            n_layers: 2,
            n_heads: 4,
            hidden_dim: 128,
            max_position_embeddings: 512,
            init_std: 0.02,
            seed: 0,
        }
    }
}

/// Vocabulary of specials, printable ASCII characters with `##` forms,
/// then `words` in order, without duplicates.
pub fn build_vocab<I, S>(words: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut vocab: Vec<String> = [PAD, UNK, CLS, SEP, MASK].iter().map(|s| s.to_string()).collect();
    let chars: Vec<char> = ('!'..='~').filter(|c| !c.is_ascii_uppercase()).collect();
    vocab.extend(chars.iter().map(|c| c.to_string()));
    vocab.extend(chars.iter().filter(|c| c.is_ascii_alphanumeric()).map(|c| format!("##{c}")));
    let mut seen: std::collections::HashSet<String> = vocab.iter().cloned().collect();
    for w in words {
        let w = w.as_ref().to_lowercase();
        if !w.is_empty() && seen.insert(w.clone()) {
            vocab.push(w);
        }
    }
    vocab
}

fn normal(shape: &[usize], std: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    let dist = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let n: usize = shape.iter().product();
    let data: Vec<f32> = (0..n).map(|_| dist.sample(rng) as f32).collect();
    Ok(Tensor::from_vec(data, shape, &Device::Cpu)?)
}

fn filled(shape: &[usize], value: f32) -> Result<Tensor> {
    Ok(Tensor::full(value, shape, &Device::Cpu)?)
}

/// Seeded random weights with the DistilBERT tensor layout.
pub fn synthetic_weights(config: &ModelConfig, std: f64, seed: u64) -> Result<Weights> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, h) = (config.dim, config.hidden_dim);
    let mut w = Weights::new();
    // Linear layers use fan-in scaling so a random network still mixes
    // token content into every position; embeddings use `std`.
    let linear = |w: &mut Weights, name: String, out: usize, inp: usize, rng: &mut ChaCha8Rng| -> Result<()> {
        w.insert(format!("{name}.weight"), normal(&[out, inp], (inp as f64).powf(-0.5), rng)?);
        w.insert(format!("{name}.bias"), filled(&[out], 0.0)?);
        Ok(())
    };
    let norm = |w: &mut Weights, name: String| -> Result<()> {
        w.insert(format!("{name}.weight"), filled(&[d], 1.0)?);
        w.insert(format!("{name}.bias"), filled(&[d], 0.0)?);
        Ok(())
    };
    let mut words = normal(&[config.vocab_size, d], std, &mut rng)?;
    if (config.pad_token_id as usize) < config.vocab_size {
        // Zero the padding row, as Hugging Face initialisation does.
        let mut rows = words.to_vec2::<f32>()?;
        rows[config.pad_token_id as usize].iter_mut().for_each(|v| *v = 0.0);
        words = Tensor::new(rows, &Device::Cpu)?;
    }
    w.insert("embeddings.word_embeddings.weight".into(), words);
    w.insert(
        "embeddings.position_embeddings.weight".into(),
        normal(&[config.max_position_embeddings, d], std, &mut rng)?,
    );
    norm(&mut w, "embeddings.LayerNorm".into())?;
    for i in 0..config.n_layers {
        let p = format!("transformer.layer.{i}");
        for lin in ["q_lin", "k_lin", "v_lin", "out_lin"] {
            linear(&mut w, format!("{p}.attention.{lin}"), d, d, &mut rng)?;
        }
        norm(&mut w, format!("{p}.sa_layer_norm"))?;
        linear(&mut w, format!("{p}.ffn.lin1"), h, d, &mut rng)?;
        linear(&mut w, format!("{p}.ffn.lin2"), d, h, &mut rng)?;
        norm(&mut w, format!("{p}.output_layer_norm"))?;
    }
    Ok(w)
}

/// Writes a randomly initialised checkpoint whose vocabulary covers `words`.
pub fn write_synthetic_checkpoint<I, S>(dir: &Path, spec: &SyntheticCheckpoint, words: I) -> Result<Checkpoint>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let tokenizer = WordPiece::from_tokens(build_vocab(words))?;
    let config = ModelConfig {
        model_type: default_model_type(),
        vocab_size: tokenizer.vocab_size(),
        dim: spec.dim,
        n_layers: spec.n_layers,
        n_heads: spec.n_heads,
        hidden_dim: spec.hidden_dim,
        max_position_embeddings: spec.max_position_embeddings,
        activation: default_activation(),
        pad_token_id: tokenizer.special().pad,
        layer_norm_eps: default_eps(),
        initializer_range: Some(spec.init_std),
    };
    let weights = synthetic_weights(&config, spec.init_std, spec.seed)?;
    save_model_dir(dir, &config, &tokenizer, &weights)?;
    Checkpoint::load(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticCheckpoint { dim: 16, n_layers: 1, n_heads: 2, hidden_dim: 32, ..Default::default() };
        let ck = write_synthetic_checkpoint(dir.path(), &spec, ["love", "truck", "love"]).unwrap();
        assert_eq!(ck.config.dim, 16);
        assert!(ck.tokenizer.token_id("truck").is_some());
        assert!(ck.id.starts_with("sha256:"));
        assert_eq!(ck.weights["transformer.layer.0.ffn.lin1.weight"].dims(), &[32, 16]);

        let again = tempfile::tempdir().unwrap();
        let ck2 = write_synthetic_checkpoint(again.path(), &spec, ["love", "truck"]).unwrap();
        assert_eq!(ck.id, ck2.id);
    }

    #[test]
    fn missing_file_names_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let err = Checkpoint::load(dir.path()).unwrap_err().to_string();
        assert!(err.contains("missing config.json"), "{err}");
    }
}
