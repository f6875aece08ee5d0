mod common;

use candle_core::{Device, Tensor};
use lyricsense_model::distilbert::mean_pool;
use lyricsense_model::encoder::{encode_text, Embed, Encoder};
use proptest::prelude::*;

fn encoder(max_len: usize) -> (tempfile::TempDir, Encoder) {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 3);
    let enc = Encoder::new(&ck, max_len).unwrap();
    (dir, enc)
}

// Sum of mask-1 rows divided by their count, computed independently of the encoder.
fn pool_oracle(tokens: &[Vec<f32>], mask: &[u8]) -> Vec<f64> {
    let h = tokens[0].len();
    let mut acc = vec![0.0f64; h];
    let mut n = 0usize;
    for (row, &m) in tokens.iter().zip(mask) {
        if m == 1 {
            n += 1;
            for (a, v) in acc.iter_mut().zip(row) {
                *a += *v as f64;
            }
        }
    }
    acc.iter().map(|a| a / n as f64).collect()
}

#[test]
fn pooling_matches_brute_force_oracle() {
    let (_d, enc) = encoder(96);
    let mut rng = common::rng(1);
    let texts: Vec<String> = (0..12).map(|_| common::random_lyric(&mut rng, 60)).collect();
    let seqs: Vec<_> = texts.iter().map(|t| enc.encode(t).unwrap()).collect();
    let raw = enc.encoder_output(&seqs).unwrap();
    let pooled = enc.embed(&seqs).unwrap();
    for ((out, seq), got) in raw.iter().zip(&seqs).zip(&pooled) {
        assert_eq!(out.token_embeddings.len(), seq.len());
        let want = pool_oracle(&out.token_embeddings, &seq.attention_mask);
        assert_eq!(got.values.len(), enc.hidden_size());
        for (g, w) in got.values.iter().zip(&want) {
            assert!((*g as f64 - w).abs() <= 1e-5, "{g} vs {w}");
        }
    }
}

#[test]
fn pooling_constant_vectors_returns_that_vector() {
    let v = [0.5f32, -1.25, 3.0, 0.0];
    let data: Vec<f32> = (0..2 * 5).flat_map(|_| v).collect();
    let hidden = Tensor::from_vec(data, (2, 5, 4), &Device::Cpu).unwrap();
    let mask = Tensor::new(&[[1u32, 1, 1, 0, 0], [1, 1, 1, 1, 1]], &Device::Cpu).unwrap();
    let pooled = mean_pool(&hidden, &mask).unwrap().to_vec2::<f32>().unwrap();
    for row in pooled {
        for (a, b) in row.iter().zip(v) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn padding_length_is_inert() {
    let (_d, short) = encoder(64);
    let dir = tempfile::tempdir().unwrap();
    let long = Encoder::new(&common::checkpoint(dir.path(), 3), 256).unwrap();
    assert_eq!(short.checkpoint_id(), long.checkpoint_id());
    let mut rng = common::rng(2);
    for _ in 0..20 {
        let text = common::random_lyric(&mut rng, 20);
        let a = short.encode(&text).unwrap();
        assert!(!a.truncated);
        let b = long.encode(&text).unwrap();
        // Full-length forward so the longer padding actually reaches the model.
        let ea = short.encoder_output(std::slice::from_ref(&a)).unwrap();
        let eb = long.encoder_output(std::slice::from_ref(&b)).unwrap();
        let pa = pool_oracle(&ea[0].token_embeddings, &a.attention_mask);
        let pb = pool_oracle(&eb[0].token_embeddings, &b.attention_mask);
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() <= 1e-4, "{x} vs {y}");
        }
        let va = short.embed_texts(&[text.as_str()]).unwrap();
        let vb = long.embed_texts(&[text.as_str()]).unwrap();
        for (x, y) in va[0].values.iter().zip(&vb[0].values) {
            assert!((x - y).abs() <= 1e-4);
        }
    }
}

#[test]
fn batch_equals_one_at_a_time() {
    let (_d, enc) = encoder(128);
    let mut rng = common::rng(3);
    let texts: Vec<String> = (0..9).map(|_| common::random_lyric(&mut rng, 150)).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let batch = enc.embed_texts(&refs).unwrap();
    for (t, b) in refs.iter().zip(&batch) {
        let single = enc.embed_texts(&[t]).unwrap().remove(0);
        assert_eq!(single.source_hash, b.source_hash);
        for (x, y) in single.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-5);
        }
    }
}

#[test]
fn deterministic_across_runs_and_loads() {
    let (d, enc) = encoder(128);
    let again = Encoder::load(d.path(), 128).unwrap();
    let texts = ["truck whiskey porch boots", "hustle flow mic street grind", ""];
    let a = enc.embed_texts(&texts).unwrap();
    let b = enc.embed_texts(&texts).unwrap();
    let c = again.embed_texts(&texts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn no_non_finite_values_over_random_lyrics() {
    let (_d, enc) = encoder(256);
    let mut rng = common::rng(4);
    let texts: Vec<String> = (0..1000).map(|_| common::random_lyric(&mut rng, 300)).collect();
    let mut seen = 0;
    for chunk in texts.chunks(50) {
        let refs: Vec<&str> = chunk.iter().map(String::as_str).collect();
        for v in enc.embed_texts(&refs).unwrap() {
            assert_eq!(v.values.len(), enc.hidden_size());
            assert!(v.values.iter().all(|x| x.is_finite()));
            seen += 1;
        }
    }
    assert_eq!(seen, 1000);
}

#[test]
fn max_len_bounds_are_enforced() {
    let (_d, enc) = encoder(64);
    assert!(enc.encode_with("a b", 7).is_err());
    assert!(enc.encode_with("a b", 513).is_err());
    assert!(enc.encode_with("a b", 8).is_ok());
    assert!(enc.encode_with("a b", 512).is_ok());
}

#[test]
fn empty_text_is_cls_sep() {
    let (_d, enc) = encoder(16);
    let t = enc.encode("").unwrap();
    let sp = enc.tokenizer().special();
    assert_eq!(&t.input_ids[..2], &[sp.cls, sp.sep]);
    assert_eq!(t.real_len(), 2);
    assert!(t.input_ids[2..].iter().all(|&i| i == sp.pad));
}

#[test]
fn long_text_truncates_to_max_len() {
    let (_d, enc) = encoder(32);
    let text = "love ".repeat(100);
    let t = enc.encode(&text).unwrap();
    assert!(t.truncated);
    assert_eq!(t.len(), 32);
    assert_eq!(t.real_len(), 32);
    assert_eq!(t.input_ids[31], enc.tokenizer().special().sep);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn token_sequence_invariants(seed in any::<u64>(), max_len in 8usize..200) {
        let dir = tempfile::tempdir().unwrap();
        let ck = common::checkpoint(dir.path(), 0);
        let text = common::random_lyric(&mut common::rng(seed), 250);
        let t = encode_text(&ck.tokenizer, &text, max_len, 512).unwrap();
        let sp = ck.tokenizer.special();
        prop_assert_eq!(t.input_ids.len(), max_len);
        prop_assert_eq!(t.attention_mask.len(), max_len);
        let real = t.real_len();
        prop_assert!(real >= 2);
        prop_assert!(t.attention_mask[..real].iter().all(|&m| m == 1));
        prop_assert!(t.attention_mask[real..].iter().all(|&m| m == 0));
        prop_assert_eq!(t.input_ids[0], sp.cls);
        prop_assert_eq!(t.input_ids[real - 1], sp.sep);
        prop_assert!(t.input_ids[real..].iter().all(|&i| i == sp.pad));
        prop_assert!(t.input_ids[1..real - 1].iter().all(|&i| i != sp.pad && i != sp.cls && i != sp.sep));
        let pieces = ck.tokenizer.tokenize(&text).len();
        prop_assert_eq!(t.truncated, pieces > max_len - 2);
        prop_assert_eq!(&t, &encode_text(&ck.tokenizer, &text, max_len, 512).unwrap());
    }
}
