#![allow(dead_code)]

use std::path::Path;

use lyricsense_core::corpus::synthetic::vocabulary;
use lyricsense_model::checkpoint::{write_synthetic_checkpoint, SyntheticCheckpoint};
use lyricsense_model::Checkpoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn checkpoint(dir: &Path, seed: u64) -> Checkpoint {
    let spec = SyntheticCheckpoint { seed, ..Default::default() };
    write_synthetic_checkpoint(dir, &spec, vocabulary()).unwrap()
}

/// Mix of known words, unknown words, punctuation and accented text.
pub fn random_lyric(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let words = vocabulary();
    let extra = ["zzyzx", "Ünïcödé", "naïve", "!!!", "...", "\u{4e2d}\u{6587}", "don't", "42", "x-ray", "\t"];
    let n = rng.random_range(0..=max_words);
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.85 {
                words[rng.random_range(0..words.len())].to_string()
            } else {
                extra[rng.random_range(0..extra.len())].to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
