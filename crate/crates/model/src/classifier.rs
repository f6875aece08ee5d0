//! Fine-tuned sequence classifier: DistilBERT backbone, dropout and a single
//! linear softmax head over the final-layer `[CLS]` vector.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use candle_core::{DType, Device, IndexOp, Tensor, Var};
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use lyricsense_core::corpus::{clean_lyrics, CuratedDataset, Split, Task};
use lyricsense_core::metrics::{classification_report, confusion, softmax};
use lyricsense_core::Report;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{file_id, save_model_dir, Checkpoint, ModelConfig, Weights, WEIGHTS_FILE};
use crate::distilbert::{parameter_names, DistilBert};
use crate::encoder::{encode_text, TokenSequence, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};
use crate::tokenizer::WordPiece;

fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    lyricsense_core::metrics::argmax(values).unwrap_or(0)
}

pub const ARTIFACT_FILE: &str = "artifact.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";
const HEAD_WEIGHT: &str = "classifier.weight";
const HEAD_BIAS: &str = "classifier.bias";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Epochs without validation-loss improvement before stopping; `None` disables.
    pub patience: Option<usize>,
    pub dropout: f64,
    /// Micro-batches per optimizer step.
    pub grad_accum: usize,
    pub seed: u64,
    pub max_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-5,
            weight_decay: 0.01,
            batch_size: 16,
            epochs: 3,
            patience: Some(1),
            dropout: 0.1,
            grad_accum: 1,
            seed: 0,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("weight_decay must be non-negative".into()));
        }
        if self.batch_size == 0 || self.grad_accum == 0 {
            return Err(Error::InvalidConfig("batch_size and grad_accum must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Class probabilities in class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub probs: BTreeMap<String, f64>,
}

impl Distribution {
    pub fn from_logits(classes: &[String], logits: &[f64]) -> Self {
        Self {
            probs: classes.iter().cloned().zip(softmax(logits)).collect(),
        }
    }

    pub fn get(&self, class: &str) -> f64 {
        self.probs.get(class).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub probs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
    pub seconds: f64,
}

/// Contents of `artifact.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub task: Task,
    pub classes: Vec<String>,
    pub artifact_id: String,
    pub base_checkpoint_id: String,
    pub hidden_size: usize,
    pub max_len: usize,
    pub train_config: TrainConfig,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
    pub final_train_loss: Option<f64>,
    pub final_validation_loss: Option<f64>,
    pub final_validation_accuracy: Option<f64>,
}

/// One labelled training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub text: String,
    pub label: usize,
}

pub struct Classifier {
    task: Task,
    classes: Vec<String>,
    config: ModelConfig,
    tokenizer: WordPiece,
    backbone: DistilBert,
    names: Vec<String>,
    params: Vec<Tensor>,
    head_w: Tensor,
    head_b: Tensor,
    base_checkpoint_id: String,
    artifact_id: Option<String>,
    train_config: TrainConfig,
    metrics: TrainMetrics,
}

fn dropout_mask(b: usize, d: usize, p: f64, rng: &mut ChaCha8Rng, device: &Device) -> Result<Tensor> {
    let keep = (1.0 / (1.0 - p)) as f32;
    let data: Vec<f32> = (0..b * d)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    Ok(Tensor::from_vec(data, (b, d), device)?)
}

fn trimmed(batch: &[&TokenSequence]) -> (Vec<Vec<u32>>, Vec<Vec<u8>>) {
    let width = batch.iter().map(|t| t.real_len()).max().unwrap_or(1).max(1);
    (
        batch.iter().map(|t| t.input_ids[..width].to_vec()).collect(),
        batch.iter().map(|t| t.attention_mask[..width].to_vec()).collect(),
    )
}

impl Classifier {
    /// Backbone from `checkpoint` and a zero head, so every class starts equiprobable.
    pub fn init(checkpoint: &Checkpoint, task: Task, classes: Vec<String>, train_config: TrainConfig) -> Result<Self> {
        train_config.validate()?;
        if classes.len() < 2 {
            return Err(Error::InvalidInput(format!("need at least two classes, got {classes:?}")));
        }
        let max_positions = checkpoint.config.max_len();
        if train_config.max_len > max_positions || train_config.max_len < crate::encoder::MIN_MAX_LEN {
            return Err(Error::InvalidConfig(format!(
                "max_len {} outside [8, {max_positions}]",
                train_config.max_len
            )));
        }
        let d = checkpoint.config.dim;
        let head_w = Tensor::zeros((classes.len(), d), DType::F32, &Device::Cpu)?;
        let head_b = Tensor::zeros(classes.len(), DType::F32, &Device::Cpu)?;
        Self::from_parts(
            task,
            classes,
            checkpoint.config.clone(),
            checkpoint.tokenizer.clone(),
            &checkpoint.weights,
            head_w,
            head_b,
            checkpoint.id.clone(),
            None,
            train_config,
            TrainMetrics {
                best_epoch: 0,
                history: Vec::new(),
                final_train_loss: None,
                final_validation_loss: None,
                final_validation_accuracy: None,
            },
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        task: Task,
        classes: Vec<String>,
        config: ModelConfig,
        tokenizer: WordPiece,
        weights: &Weights,
        head_w: Tensor,
        head_b: Tensor,
        base_checkpoint_id: String,
        artifact_id: Option<String>,
        train_config: TrainConfig,
        metrics: TrainMetrics,
    ) -> Result<Self> {
        let names = parameter_names(&config);
        let params = names
            .iter()
            .map(|n| {
                weights
                    .get(n)
                    .cloned()
                    .ok_or_else(|| Error::checkpoint(&base_checkpoint_id, format!("missing tensor {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let map: Weights = names.iter().cloned().zip(params.iter().cloned()).collect();
        let backbone = DistilBert::new(&config, &map)?;
        if head_w.dims() != [classes.len(), config.dim] || head_b.dims() != [classes.len()] {
            return Err(Error::Mismatch(format!(
                "head shape {:?} does not fit {} classes of width {}",
                head_w.dims(),
                classes.len(),
                config.dim
            )));
        }
        Ok(Self {
            task,
            classes,
            config,
            tokenizer,
            backbone,
            names,
            params,
            head_w,
            head_b,
            base_checkpoint_id,
            artifact_id,
            train_config,
            metrics,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn hidden_size(&self) -> usize {
        self.config.dim
    }

    pub fn max_len(&self) -> usize {
        self.train_config.max_len
    }

    pub fn tokenizer(&self) -> &WordPiece {
        &self.tokenizer
    }

    pub fn base_checkpoint_id(&self) -> &str {
        &self.base_checkpoint_id
    }

    /// Digest of the saved weights; `None` before the first save.
    pub fn artifact_id(&self) -> Option<&str> {
        self.artifact_id.as_deref()
    }

    pub fn metrics(&self) -> &TrainMetrics {
        &self.metrics
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train_config
    }

    pub fn encode(&self, text: &str) -> Result<TokenSequence> {
        encode_text(&self.tokenizer, text, self.train_config.max_len, self.config.max_len())
    }

    fn logits_tensor(&self, batch: &[&TokenSequence], drop: Option<&Tensor>) -> Result<Tensor> {
        let (ids, masks) = trimmed(batch);
        let (ids, mask) = self.backbone.batch_tensors(&ids, &masks)?;
        let hidden = self.backbone.forward(&ids, &mask)?;
        let mut cls = hidden.i((.., 0, ..))?.contiguous()?;
        if let Some(m) = drop {
            cls = (cls * m)?;
        }
        Ok(cls.matmul(&self.head_w.t()?)?.broadcast_add(&self.head_b)?)
    }

    /// Raw logits per sequence, in inference mode.
    pub fn logits(&self, batch: &[TokenSequence]) -> Result<Vec<Vec<f64>>> {
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let refs: Vec<&TokenSequence> = batch.iter().collect();
        let rows = self.logits_tensor(&refs, None)?.to_vec2::<f32>()?;
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logits"));
        }
        Ok(rows)
    }

    /// Cleans `lyrics`, then returns the softmax distribution and its argmax.
    pub fn predict_probs(&self, lyrics: &str) -> Result<Prediction> {
        let cleaned = clean_lyrics(lyrics);
        if cleaned.is_empty() {
            return Err(Error::NoContent);
        }
        let seq = self.encode(&cleaned)?;
        let logits = self.logits(std::slice::from_ref(&seq))?.remove(0);
        let dist = Distribution::from_logits(&self.classes, &logits);
        Ok(Prediction {
            label: self.classes[argmax(&logits)].clone(),
            probs: dist.probs,
        })
    }

    /// Predicted class index for each text (already cleaned).
    pub fn predict_indices(&self, texts: &[&str], batch_size: usize) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(batch_size.max(1)) {
            let seqs = chunk.iter().map(|t| self.encode(t)).collect::<Result<Vec<_>>>()?;
            out.extend(self.logits(&seqs)?.iter().map(|l| argmax(l)));
        }
        Ok(out)
    }

    /// Confusion matrix and report over `(text, class)` pairs.
    pub fn evaluate(&self, examples: &[(&str, &str)], batch_size: usize) -> Result<Report> {
        if examples.is_empty() {
            return Err(Error::InvalidInput("evaluation split is empty".into()));
        }
        if let Some((_, c)) = examples.iter().find(|(_, c)| !self.classes.iter().any(|k| k == c)) {
            return Err(Error::Mismatch(format!("class {c:?} is not among the artifact classes {:?}", self.classes)));
        }
        let texts: Vec<&str> = examples.iter().map(|(t, _)| *t).collect();
        let pred: Vec<&str> = self
            .predict_indices(&texts, batch_size)?
            .into_iter()
            .map(|i| self.classes[i].as_str())
            .collect();
        let truth: Vec<&str> = examples.iter().map(|(_, c)| *c).collect();
        let cm = confusion(&truth, &pred, &self.classes)?;
        Ok(classification_report(&cm)?)
    }

    fn loss_and_accuracy(&self, seqs: &[TokenSequence], labels: &[u32]) -> Result<(f64, f64)> {
        let mut loss = 0.0;
        let mut correct = 0usize;
        let bs = self.train_config.batch_size;
        for (chunk, lab) in seqs.chunks(bs).zip(labels.chunks(bs)) {
            let refs: Vec<&TokenSequence> = chunk.iter().collect();
            let logits = self.logits_tensor(&refs, None)?;
            let target = Tensor::new(lab, logits.device())?;
            let l = candle_nn::loss::cross_entropy(&logits, &target)?.to_scalar::<f32>()? as f64;
            loss += l * chunk.len() as f64;
            let rows = logits.to_vec2::<f32>()?;
            correct += rows
                .iter()
                .zip(lab)
                .filter(|(r, &y)| argmax(r) == y as usize)
                .count();
        }
        let n = seqs.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }

    fn all_tensors(&self) -> Vec<Tensor> {
        let mut t = self.params.clone();
        t.push(self.head_w.clone());
        t.push(self.head_b.clone());
        t
    }

    fn rebuild(&mut self, tensors: Vec<Tensor>) -> Result<()> {
        let mut tensors = tensors;
        self.head_b = tensors.pop().expect("head bias");
        self.head_w = tensors.pop().expect("head weight");
        let map: Weights = self.names.iter().cloned().zip(tensors.iter().cloned()).collect();
        self.backbone = DistilBert::new(&self.config, &map)?;
        self.params = tensors;
        Ok(())
    }

    /// Fine-tunes backbone and head end to end with cross-entropy and AdamW.
    ///
    /// With a validation set the weights of the lowest-validation-loss epoch
    /// are kept; `on_epoch` sees each epoch record as it completes.
    pub fn fit(
        &mut self,
        train: &[Example],
        validation: &[Example],
        on_epoch: &mut dyn FnMut(&EpochLog) -> Result<()>,
    ) -> Result<()> {
        let cfg = self.train_config.clone();
        if train.is_empty() {
            return Err(Error::InvalidInput("training split is empty".into()));
        }
        let c = self.classes.len();
        if let Some(e) = train.iter().chain(validation).find(|e| e.label >= c) {
            return Err(Error::InvalidInput(format!("label index {} out of range", e.label)));
        }
        let encode = |xs: &[Example]| -> Result<(Vec<TokenSequence>, Vec<u32>)> {
            let seqs = xs.iter().map(|e| self.encode(&e.text)).collect::<Result<Vec<_>>>()?;
            Ok((seqs, xs.iter().map(|e| e.label as u32).collect()))
        };
        let (train_seqs, train_labels) = encode(train)?;
        let (val_seqs, val_labels) = encode(validation)?;
        let truncated = train_seqs.iter().filter(|s| s.truncated).count();
        if truncated > 0 {
            log::info!("{truncated} of {} training texts truncated to {} tokens", train.len(), cfg.max_len);
        }

        let vars = self
            .all_tensors()
            .iter()
            .map(Var::from_tensor)
            .collect::<candle_core::Result<Vec<Var>>>()?;
        self.rebuild(vars.iter().map(|v| v.as_tensor().clone()).collect())?;
        let mut opt = AdamW::new(
            vars.clone(),
            ParamsAdamW {
                lr: cfg.learning_rate,
                weight_decay: cfg.weight_decay,
                ..ParamsAdamW::default()
            },
        )?;

        let d = self.config.dim;
        let device = Device::Cpu;
        let mut drop_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        drop_rng.set_stream(u64::MAX);
        let mut best: Option<(f64, usize, Vec<Tensor>)> = None;
        let mut stale = 0usize;
        let mut history = Vec::new();
        let mut last_train_loss = None;

        for epoch in 1..=cfg.epochs {
            let start = Instant::now();
            let mut order: Vec<usize> = (0..train.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(epoch as u64);
            order.shuffle(&mut rng);

            let mut loss_sum = 0.0;
            let mut correct = 0usize;
            let mut pending: Option<candle_core::backprop::GradStore> = None;
            let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
            for (step, idx) in batches.iter().enumerate() {
                let refs: Vec<&TokenSequence> = idx.iter().map(|&i| &train_seqs[i]).collect();
                let mask = if cfg.dropout > 0.0 {
                    Some(dropout_mask(idx.len(), d, cfg.dropout, &mut drop_rng, &device)?)
                } else {
                    None
                };
                let logits = self.logits_tensor(&refs, mask.as_ref())?;
                let labels: Vec<u32> = idx.iter().map(|&i| train_labels[i]).collect();
                let target = Tensor::new(labels.as_slice(), &device)?;
                let loss = candle_nn::loss::cross_entropy(&logits, &target)?;
                let value = loss.to_scalar::<f32>()?;
                if !value.is_finite() {
                    return Err(Error::Diverged {
                        epoch,
                        step: step + 1,
                        loss: value,
                    });
                }
                loss_sum += value as f64 * idx.len() as f64;
                let rows = logits.to_vec2::<f32>()?;
                correct += rows
                    .iter()
                    .zip(&labels)
                    .filter(|(r, &y)| argmax(r) == y as usize)
                    .count();

                let grads = (loss / cfg.grad_accum as f64)?.backward()?;
                match pending.as_mut() {
                    Some(acc) => acc.extend(grads)?,
                    None => pending = Some(grads),
                }
                if (step + 1) % cfg.grad_accum == 0 || step + 1 == batches.len() {
                    opt.step(pending.as_ref().expect("gradients"))?;
                    pending = None;
                }
            }

            let train_loss = loss_sum / train.len() as f64;
            let (validation_loss, validation_accuracy) = if val_seqs.is_empty() {
                (None, None)
            } else {
                let (l, a) = self.loss_and_accuracy(&val_seqs, &val_labels)?;
                (Some(l), Some(a))
            };
            let log = EpochLog {
                epoch,
                train_loss,
                train_accuracy: correct as f64 / train.len() as f64,
                validation_loss,
                validation_accuracy,
                seconds: start.elapsed().as_secs_f64(),
            };
            log::info!(
                "epoch {epoch}: train loss {:.4} acc {:.3}, validation loss {:?}",
                log.train_loss,
                log.train_accuracy,
                log.validation_loss
            );
            on_epoch(&log)?;
            history.push(log);
            last_train_loss = Some(train_loss);

            if let Some(vl) = validation_loss {
                if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                    let snapshot = vars.iter().map(|v| v.as_tensor().copy()).collect::<candle_core::Result<Vec<_>>>()?;
                    best = Some((vl, epoch, snapshot));
                    stale = 0;
                } else {
                    stale += 1;
                    if cfg.patience.is_some_and(|p| stale >= p) {
                        log::info!("early stop after epoch {epoch}");
                        break;
                    }
                }
            }
        }

        let frozen: Vec<Tensor> = match &best {
            Some((_, _, snapshot)) => snapshot.clone(),
            None => vars.iter().map(|v| v.as_tensor().copy()).collect::<candle_core::Result<Vec<_>>>()?,
        };
        let best_epoch = best.as_ref().map_or(history.len(), |(_, e, _)| *e);
        self.rebuild(frozen)?;
        let picked = history.iter().find(|h| h.epoch == best_epoch);
        self.metrics = TrainMetrics {
            best_epoch,
            final_train_loss: picked.map(|h| h.train_loss).or(last_train_loss),
            final_validation_loss: picked.and_then(|h| h.validation_loss),
            final_validation_accuracy: picked.and_then(|h| h.validation_accuracy),
            history,
        };
        if self.metrics.history.is_empty() && !val_seqs.is_empty() {
            let (l, a) = self.loss_and_accuracy(&val_seqs, &val_labels)?;
            self.metrics.final_validation_loss = Some(l);
            self.metrics.final_validation_accuracy = Some(a);
        }
        self.artifact_id = None;
        Ok(())
    }

    fn weights(&self) -> Weights {
        let mut w: Weights = self.names.iter().cloned().zip(self.params.iter().cloned()).collect();
        w.insert(HEAD_WEIGHT.into(), self.head_w.clone());
        w.insert(HEAD_BIAS.into(), self.head_b.clone());
        w
    }

    pub fn meta(&self) -> Result<ArtifactMeta> {
        Ok(ArtifactMeta {
            task: self.task,
            classes: self.classes.clone(),
            artifact_id: self
                .artifact_id
                .clone()
                .ok_or_else(|| Error::InvalidInput("artifact has not been saved".into()))?,
            base_checkpoint_id: self.base_checkpoint_id.clone(),
            hidden_size: self.config.dim,
            max_len: self.train_config.max_len,
            train_config: self.train_config.clone(),
            best_epoch: self.metrics.best_epoch,
            epochs_run: self.metrics.history.len(),
        })
    }

    /// Writes weights, config, vocabulary, `artifact.json`, `metrics.json`
    /// and `train_log.jsonl` into `dir`.
    pub fn save(&mut self, dir: &Path) -> Result<ArtifactMeta> {
        save_model_dir(dir, &self.config, &self.tokenizer, &self.weights())?;
        self.artifact_id = Some(file_id(&dir.join(WEIGHTS_FILE))?);
        let meta = self.meta()?;
        write_json(&dir.join(ARTIFACT_FILE), &meta)?;
        write_json(&dir.join(METRICS_FILE), &self.metrics)?;
        let log_path = dir.join(TRAIN_LOG_FILE);
        let mut lines = String::new();
        for h in &self.metrics.history {
            lines.push_str(&serde_json::to_string(h)?);
            lines.push('\n');
        }
        fs::write(&log_path, lines).map_err(|e| Error::io(&log_path, e))?;
        Ok(meta)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: ArtifactMeta = read_json(&dir.join(ARTIFACT_FILE))?;
        let ck = Checkpoint::load(dir)?;
        if ck.id != meta.artifact_id {
            return Err(Error::Mismatch(format!(
                "{}: weights digest {} differs from recorded {}",
                dir.display(),
                ck.id,
                meta.artifact_id
            )));
        }
        let metrics: TrainMetrics = read_json(&dir.join(METRICS_FILE))?;
        let take = |n: &str| {
            ck.weights
                .get(n)
                .cloned()
                .ok_or_else(|| Error::checkpoint(&ck.id, format!("missing tensor {n}")))
        };
        let (head_w, head_b) = (take(HEAD_WEIGHT)?, take(HEAD_BIAS)?);
        Self::from_parts(
            meta.task,
            meta.classes,
            ck.config.clone(),
            ck.tokenizer.clone(),
            &ck.weights,
            head_w,
            head_b,
            meta.base_checkpoint_id,
            Some(meta.artifact_id),
            meta.train_config,
            metrics,
        )
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Appends one JSON line per call to a training log.
pub struct JsonlLog {
    path: PathBuf,
}

impl JsonlLog {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, "").map_err(|e| Error::io(path, e))?;
        Ok(Self { path: path.to_path_buf() })
    }

    pub fn append<T: Serialize>(&self, record: &T) -> Result<()> {
        let mut f = OpenOptions::new()
            .append(true)
            .open(&self.path)
            .map_err(|e| Error::io(&self.path, e))?;
        writeln!(f, "{}", serde_json::to_string(record)?).map_err(|e| Error::io(&self.path, e))
    }
}

/// Splits a curated genre or success dataset into train and validation examples.
pub fn examples_from_dataset(dataset: &CuratedDataset) -> Result<(Vec<String>, Vec<Example>, Vec<Example>)> {
    let classes = dataset
        .task
        .classes()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a classification task", dataset.task)))?;
    let distinct: std::collections::BTreeSet<String> = dataset.entries.iter().map(|e| e.label.to_class()).collect();
    if distinct.len() < 2 {
        return Err(Error::InvalidInput(format!("dataset has a single class {distinct:?}")));
    }
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for e in &dataset.entries {
        let class = e.label.to_class();
        let label = classes
            .iter()
            .position(|c| *c == class)
            .ok_or_else(|| Error::InvalidInput(format!("label {class} outside task classes")))?;
        let ex = Example {
            text: e.record.lyrics.clone(),
            label,
        };
        match e.split {
            Some(Split::Train) => train.push(ex),
            Some(Split::Validation) => validation.push(ex),
            Some(Split::Test) => {}
            None => return Err(Error::InvalidInput("dataset splits are not assigned".into())),
        }
    }
    Ok((classes, train, validation))
}

/// Initialises from `checkpoint` and fine-tunes on the dataset's train split.
pub fn train_classifier(
    checkpoint: &Checkpoint,
    dataset: &CuratedDataset,
    config: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog) -> Result<()>,
) -> Result<Classifier> {
    let (classes, train, validation) = examples_from_dataset(dataset)?;
    let mut model = Classifier::init(checkpoint, dataset.task, classes, config.clone())?;
    model.fit(&train, &validation, on_epoch)?;
    Ok(model)
}
