//! Transformer side of the lyric models: WordPiece tokenization, a DistilBERT
//! encoder on candle, the embedding cache, fine-tuned classifiers and the
//! year regressor artifact.
//!
//! Tensors are `f32` throughout.

pub mod cache;
pub mod checkpoint;
pub mod classifier;
pub mod distilbert;
pub mod encoder;
mod error;
pub mod tokenizer;
pub mod year;

pub use cache::{embed_corpus, CacheStats, EmbeddingCache, EmbeddingMatrix};
pub use checkpoint::{write_synthetic_checkpoint, Checkpoint, ModelConfig, SyntheticCheckpoint};
pub use classifier::{train_classifier, Classifier, Distribution, EpochLog, Example, Prediction, TrainConfig};
pub use encoder::{encode_text, Embed, EmbeddingVector, Encoder, TokenSequence};
pub use error::{Error, Result};
pub use tokenizer::WordPiece;
pub use year::YearArtifact;
