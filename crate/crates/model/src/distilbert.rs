//! DistilBERT encoder forward pass on candle tensors.
//!
//! Built from primitive ops only so every parameter is differentiable
//! during fine-tuning.

use candle_core::{DType, Device, Module, Tensor, D};

use crate::checkpoint::{ModelConfig, Weights};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.broadcast_matmul(&self.weight.t()?)?.broadcast_add(&self.bias)?)
    }
}

#[derive(Debug, Clone)]
struct LayerNorm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl LayerNorm {
    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let d = x.dim(D::Minus1)? as f64;
        let mean = (x.sum_keepdim(D::Minus1)? / d)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = (centered.sqr()?.sum_keepdim(D::Minus1)? / d)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed.broadcast_mul(&self.weight)?.broadcast_add(&self.bias)?)
    }
}

#[derive(Debug, Clone)]
struct Block {
    q: Linear,
    k: Linear,
    v: Linear,
    out: Linear,
    sa_norm: LayerNorm,
    lin1: Linear,
    lin2: Linear,
    out_norm: LayerNorm,
}

#[derive(Debug, Clone)]
pub struct DistilBert {
    word_embeddings: Tensor,
    position_embeddings: Tensor,
    embed_norm: LayerNorm,
    blocks: Vec<Block>,
    n_heads: usize,
    relu: bool,
    device: Device,
}

fn take(weights: &Weights, name: &str) -> Result<Tensor> {
    weights
        .get(name)
        .cloned()
        .ok_or_else(|| Error::InvalidConfig(format!("checkpoint lacks tensor {name}")))
}

fn linear(weights: &Weights, name: &str, out: usize, inp: usize) -> Result<Linear> {
    let weight = take(weights, &format!("{name}.weight"))?;
    let bias = take(weights, &format!("{name}.bias"))?;
    if weight.dims() != [out, inp] || bias.dims() != [out] {
        return Err(Error::InvalidConfig(format!(
            "{name}: expected [{out}, {inp}], found {:?}",
            weight.dims()
        )));
    }
    Ok(Linear { weight, bias })
}

fn layer_norm(weights: &Weights, name: &str, dim: usize, eps: f64) -> Result<LayerNorm> {
    // Older checkpoints name the affine terms gamma/beta.
    let get = |a: &str, b: &str| take(weights, &format!("{name}.{a}")).or_else(|_| take(weights, &format!("{name}.{b}")));
    let weight = get("weight", "gamma")?;
    let bias = get("bias", "beta")?;
    if weight.dims() != [dim] || bias.dims() != [dim] {
        return Err(Error::InvalidConfig(format!("{name}: expected [{dim}]")));
    }
    Ok(LayerNorm { weight, bias, eps })
}

/// Tensor names the encoder reads, in a stable order.
pub fn parameter_names(config: &ModelConfig) -> Vec<String> {
    let mut names = vec![
        "embeddings.word_embeddings.weight".to_string(),
        "embeddings.position_embeddings.weight".to_string(),
        "embeddings.LayerNorm.weight".to_string(),
        "embeddings.LayerNorm.bias".to_string(),
    ];
    for i in 0..config.n_layers {
        let p = format!("transformer.layer.{i}");
        for part in [
            "attention.q_lin",
            "attention.k_lin",
            "attention.v_lin",
            "attention.out_lin",
            "sa_layer_norm",
            "ffn.lin1",
            "ffn.lin2",
            "output_layer_norm",
        ] {
            names.push(format!("{p}.{part}.weight"));
            names.push(format!("{p}.{part}.bias"));
        }
    }
    names
}

impl DistilBert {
    pub fn new(config: &ModelConfig, weights: &Weights) -> Result<Self> {
        config.validate()?;
        let (d, h, eps) = (config.dim, config.hidden_dim, config.layer_norm_eps);
        let word_embeddings = take(weights, "embeddings.word_embeddings.weight")?;
        let position_embeddings = take(weights, "embeddings.position_embeddings.weight")?;
        if word_embeddings.dims() != [config.vocab_size, d]
            || position_embeddings.dims() != [config.max_position_embeddings, d]
        {
            return Err(Error::InvalidConfig("embedding tables do not match config".into()));
        }
        let mut blocks = Vec::with_capacity(config.n_layers);
        for i in 0..config.n_layers {
            let p = format!("transformer.layer.{i}");
            blocks.push(Block {
                q: linear(weights, &format!("{p}.attention.q_lin"), d, d)?,
                k: linear(weights, &format!("{p}.attention.k_lin"), d, d)?,
                v: linear(weights, &format!("{p}.attention.v_lin"), d, d)?,
                out: linear(weights, &format!("{p}.attention.out_lin"), d, d)?,
                sa_norm: layer_norm(weights, &format!("{p}.sa_layer_norm"), d, eps)?,
                lin1: linear(weights, &format!("{p}.ffn.lin1"), h, d)?,
                lin2: linear(weights, &format!("{p}.ffn.lin2"), d, h)?,
                out_norm: layer_norm(weights, &format!("{p}.output_layer_norm"), d, eps)?,
            });
        }
        Ok(Self {
            device: word_embeddings.device().clone(),
            word_embeddings,
            position_embeddings,
            embed_norm: layer_norm(weights, "embeddings.LayerNorm", d, eps)?,
            blocks,
            n_heads: config.n_heads,
            relu: config.activation == "relu",
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.word_embeddings.dim(1).unwrap_or(0)
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    /// Final-layer hidden states `[batch, seq, dim]` for `input_ids` and a
    /// 0/1 `attention_mask`, both `[batch, seq]` u32.
    pub fn forward(&self, input_ids: &Tensor, attention_mask: &Tensor) -> Result<Tensor> {
        let (b, s) = input_ids.dims2()?;
        let d = self.hidden_size();
        let heads = self.n_heads;
        let dh = d / heads;

        let words = self.word_embeddings.embedding(&input_ids.flatten_all()?)?.reshape((b, s, d))?;
        let positions = self.position_embeddings.narrow(0, 0, s)?.unsqueeze(0)?;
        let mut x = self.embed_norm.forward(&words.broadcast_add(&positions)?)?;

        // Additive key mask: 0 for real tokens, -1e9 for padding.
        let mask = attention_mask.to_dtype(DType::F32)?;
        let bias = ((mask - 1.0)? * 1e9)?.reshape((b, 1, 1, s))?;
        let scale = 1.0 / (dh as f64).sqrt();

        for blk in &self.blocks {
            let split = |t: Tensor| -> Result<Tensor> {
                Ok(t.reshape((b, s, heads, dh))?.transpose(1, 2)?.contiguous()?)
            };
            let q = split((blk.q.forward(&x)? * scale)?)?;
            let k = split(blk.k.forward(&x)?)?;
            let v = split(blk.v.forward(&x)?)?;
            let scores = q.matmul(&k.t()?.contiguous()?)?.broadcast_add(&bias)?;
            let weights = candle_nn::ops::softmax(&scores, D::Minus1)?;
            let ctx = weights
                .matmul(&v)?
                .transpose(1, 2)?
                .contiguous()?
                .reshape((b, s, d))?;
            let attended = blk.sa_norm.forward(&(blk.out.forward(&ctx)? + &x)?)?;
            let inner = blk.lin1.forward(&attended)?;
            let inner = if self.relu {
                candle_nn::Activation::Relu.forward(&inner)?
            } else {
                inner.gelu_erf()?
            };
            x = blk.out_norm.forward(&(blk.lin2.forward(&inner)? + attended)?)?;
        }
        Ok(x)
    }

    /// Builds u32 id and mask tensors from equal-length rows.
    pub fn batch_tensors(&self, ids: &[Vec<u32>], masks: &[Vec<u8>]) -> Result<(Tensor, Tensor)> {
        let b = ids.len();
        let s = ids.first().map_or(0, Vec::len);
        if b == 0 || s == 0 {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if ids.iter().any(|r| r.len() != s) || masks.len() != b || masks.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidInput("ragged batch".into()));
        }
        let flat_ids: Vec<u32> = ids.iter().flatten().copied().collect();
        let flat_mask: Vec<u32> = masks.iter().flatten().map(|&m| m as u32).collect();
        Ok((
            Tensor::from_vec(flat_ids, (b, s), &self.device)?,
            Tensor::from_vec(flat_mask, (b, s), &self.device)?,
        ))
    }
}

/// Mask-aware mean over the sequence axis: `[b, s, d]` and `[b, s]` to `[b, d]`.
pub fn mean_pool(hidden: &Tensor, attention_mask: &Tensor) -> Result<Tensor> {
    let mask = attention_mask.to_dtype(DType::F32)?.unsqueeze(2)?;
    let summed = hidden.broadcast_mul(&mask)?.sum(1)?;
    let counts = mask.sum(1)?.clamp(1.0, f64::INFINITY)?;
    Ok(summed.broadcast_div(&counts)?)
}
