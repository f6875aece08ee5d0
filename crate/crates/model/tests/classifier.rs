mod common;

use lyricsense_core::corpus::synthetic::keyword_fixture;
use lyricsense_core::corpus::{CuratedDataset, CuratedEntry, CurationConfig, Label, Split, Task};
use lyricsense_core::metrics::{classification_report, confusion};
use lyricsense_core::Report;
use lyricsense_model::classifier::{ARTIFACT_FILE, METRICS_FILE, TRAIN_LOG_FILE};
use lyricsense_model::{train_classifier, Classifier, Distribution, Error, Example, TrainConfig};
use proptest::prelude::*;

fn genre_classes() -> Vec<String> {
    Task::Genre.classes().unwrap()
}

fn fixture(rows: usize, seed: u64) -> Vec<Example> {
    let classes = genre_classes();
    keyword_fixture(rows, 40, seed)
        .into_iter()
        .map(|r| Example {
            label: classes.iter().position(|c| *c == r.genre).unwrap(),
            text: r.lyrics,
        })
        .collect()
}

fn overfit_config() -> TrainConfig {
    TrainConfig {
        epochs: 30,
        batch_size: 8,
        max_len: 64,
        patience: None,
        seed: 5,
        ..Default::default()
    }
}

fn accuracy(model: &Classifier, data: &[Example]) -> f64 {
    let texts: Vec<&str> = data.iter().map(|e| e.text.as_str()).collect();
    let pred = model.predict_indices(&texts, 16).unwrap();
    pred.iter().zip(data).filter(|(p, e)| **p == e.label).count() as f64 / data.len() as f64
}

#[test]
fn overfits_keyword_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let train = fixture(64, 7);
    let cfg = overfit_config();
    assert_eq!(cfg.learning_rate, 1e-5);
    assert_eq!(cfg.weight_decay, 0.01);
    let mut model = Classifier::init(&ck, Task::Genre, genre_classes(), cfg).unwrap();
    let mut losses = Vec::new();
    model
        .fit(&train, &[], &mut |log| {
            losses.push(log.train_loss);
            Ok(())
        })
        .unwrap();
    assert_eq!(losses.len(), 30);
    let acc = accuracy(&model, &train);
    assert!(acc >= 0.95, "train accuracy {acc}");

    for w in losses.windows(2) {
        assert!(w[1] <= w[0] * 1.05, "loss spiked from {} to {}", w[0], w[1]);
    }
    assert!(losses[29] < losses[0]);

    let rap = model
        .predict_probs("[Verse]\nhustle on the block with my flow\nmic in hand I grind for cash, street bars all night")
        .unwrap();
    assert_eq!(rap.label, "rap");
    let total: f64 = rap.probs.values().sum();
    assert!((total - 1.0).abs() <= 1e-6);
    assert!(rap.probs.values().all(|&p| p > 0.0 && p < 1.0));
}

#[test]
fn zero_epochs_gives_uniform_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let data = fixture(40, 8);
    let (train, val) = data.split_at(30);
    let cfg = TrainConfig { epochs: 0, max_len: 64, ..Default::default() };
    let mut model = Classifier::init(&ck, Task::Genre, genre_classes(), cfg).unwrap();
    model.fit(train, val, &mut |_| Ok(())).unwrap();
    let p = model.predict_probs("truck whiskey porch").unwrap();
    for v in p.probs.values() {
        assert!((v - 0.2).abs() < 1e-9);
    }
    // Ties resolve to the first class, so accuracy is that class's share.
    let share = val.iter().filter(|e| e.label == 0).count() as f64 / val.len() as f64;
    assert_eq!(model.metrics().final_validation_accuracy, Some(share));
    assert!((share - 0.2).abs() < 1e-9);
    assert!(model.metrics().history.is_empty());
}

#[test]
fn same_seed_same_metrics_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let data = fixture(40, 9);
    let (train, val) = data.split_at(32);
    let cfg = TrainConfig { epochs: 2, max_len: 48, seed: 3, ..Default::default() };
    let run = |out: &std::path::Path| {
        let mut m = Classifier::init(&ck, Task::Genre, genre_classes(), cfg.clone()).unwrap();
        m.fit(train, val, &mut |_| Ok(())).unwrap();
        let meta = m.save(out).unwrap();
        (m.metrics().clone(), meta.artifact_id)
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ma, ia) = run(a.path());
    let (mb, ib) = run(b.path());
    assert_eq!(ma.final_validation_loss, mb.final_validation_loss);
    assert_eq!(ma.final_validation_accuracy, mb.final_validation_accuracy);
    assert_eq!(ma.best_epoch, mb.best_epoch);
    assert_eq!(ia, ib);
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let data = fixture(30, 10);
    let (train, val) = data.split_at(25);
    let cfg = TrainConfig { epochs: 2, max_len: 48, patience: Some(1), ..Default::default() };
    let mut model = Classifier::init(&ck, Task::Genre, genre_classes(), cfg).unwrap();
    let mut logged = 0;
    model
        .fit(train, val, &mut |_| {
            logged += 1;
            Ok(())
        })
        .unwrap();
    assert!(model.artifact_id().is_none());
    let out = tempfile::tempdir().unwrap();
    let meta = model.save(out.path()).unwrap();
    for f in ["model.safetensors", "config.json", "vocab.txt", ARTIFACT_FILE, METRICS_FILE, TRAIN_LOG_FILE] {
        assert!(out.path().join(f).is_file(), "{f}");
    }
    assert_eq!(meta.base_checkpoint_id, ck.id);
    assert_eq!(meta.classes, genre_classes());
    assert_eq!(meta.epochs_run, logged);
    let log = std::fs::read_to_string(out.path().join(TRAIN_LOG_FILE)).unwrap();
    assert_eq!(log.lines().count(), logged);

    let loaded = Classifier::load(out.path()).unwrap();
    assert_eq!(loaded.artifact_id(), Some(meta.artifact_id.as_str()));
    assert_eq!(loaded.metrics(), model.metrics());
    for text in ["rebel guitar thunder", "slow honey velvet soul", "x"] {
        assert_eq!(loaded.predict_probs(text).unwrap(), model.predict_probs(text).unwrap());
    }

    // Weights that no longer match the recorded digest are rejected.
    let w = out.path().join("model.safetensors");
    let mut bytes = std::fs::read(&w).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    std::fs::write(&w, bytes).unwrap();
    assert!(matches!(Classifier::load(out.path()), Err(Error::Mismatch(_))));
}

fn hand_report(model: &Classifier, examples: &[(&str, &str)]) -> Report {
    let truth: Vec<&str> = examples.iter().map(|(_, c)| *c).collect();
    let pred: Vec<String> = examples
        .iter()
        .map(|(t, _)| model.predict_probs(t).unwrap().label)
        .collect();
    classification_report(&confusion(&truth, &pred, model.classes()).unwrap()).unwrap()
}

#[test]
fn evaluation_matches_metrics_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let data = fixture(40, 11);
    let cfg = TrainConfig { epochs: 1, max_len: 64, ..Default::default() };
    let mut model = Classifier::init(&ck, Task::Genre, genre_classes(), cfg).unwrap();
    model.fit(&data[..30], &[], &mut |_| Ok(())).unwrap();
    let classes = genre_classes();
    let test: Vec<(&str, &str)> = data[30..].iter().map(|e| (e.text.as_str(), classes[e.label].as_str())).collect();
    let report = model.evaluate(&test, 4).unwrap();
    assert_eq!(report, hand_report(&model, &test));

    assert!(matches!(model.evaluate(&[("love", "jazz")], 4), Err(Error::Mismatch(_))));
    assert!(model.evaluate(&[], 4).is_err());
}

#[test]
fn cleaning_runs_before_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let data = fixture(20, 12);
    let cfg = TrainConfig { epochs: 1, max_len: 64, ..Default::default() };
    let mut model = Classifier::init(&ck, Task::Genre, genre_classes(), cfg).unwrap();
    model.fit(&data, &[], &mut |_| Ok(())).unwrap();
    let a = model.predict_probs("truck   whiskey\n\n\tporch  boots").unwrap();
    let b = model.predict_probs("[Chorus]\ntruck whiskey porch boots").unwrap();
    assert_eq!(a, b);
    assert!(matches!(model.predict_probs("[Intro]\n  \n"), Err(Error::NoContent)));
    assert!(matches!(model.predict_probs(""), Err(Error::NoContent)));
}

fn dataset(labels: &[&str]) -> CuratedDataset {
    let recs = keyword_fixture(labels.len(), 40, 1);
    CuratedDataset {
        task: Task::Genre,
        entries: recs
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (r, l))| CuratedEntry {
                record: r,
                label: Label::parse(Task::Genre, l).unwrap(),
                split: Some(if i % 5 == 4 { Split::Validation } else { Split::Train }),
            })
            .collect(),
        config: CurationConfig::default(),
        seed: 0,
        warnings: Vec::new(),
        created_at: String::new(),
    }
}

#[test]
fn single_class_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let ds = dataset(&["rap"; 10]);
    let err = train_classifier(&ck, &ds, &TrainConfig::default(), &mut |_| Ok(()));
    assert!(matches!(err, Err(Error::InvalidInput(_))));

    let mut unsplit = dataset(&["rap", "pop", "rock", "rb", "country"]);
    unsplit.entries[0].split = None;
    assert!(train_classifier(&ck, &unsplit, &TrainConfig::default(), &mut |_| Ok(())).is_err());
}

#[test]
fn train_classifier_uses_dataset_splits() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let ds = dataset(&["rap", "pop", "rock", "rb", "country"].repeat(4));
    let cfg = TrainConfig { epochs: 1, max_len: 32, ..Default::default() };
    let model = train_classifier(&ck, &ds, &cfg, &mut |_| Ok(())).unwrap();
    assert_eq!(model.classes(), genre_classes().as_slice());
    let h = &model.metrics().history[0];
    assert!(h.validation_loss.is_some());
    assert!(h.train_loss.is_finite());
}

#[test]
fn invalid_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let bad = [
        TrainConfig { learning_rate: 0.0, ..Default::default() },
        TrainConfig { weight_decay: -0.1, ..Default::default() },
        TrainConfig { batch_size: 0, ..Default::default() },
        TrainConfig { dropout: 1.0, ..Default::default() },
        TrainConfig { max_len: 4, ..Default::default() },
    ];
    for cfg in bad {
        assert!(Classifier::init(&ck, Task::Genre, genre_classes(), cfg).is_err());
    }
    assert!(Classifier::init(&ck, Task::Genre, vec!["pop".into()], TrainConfig::default()).is_err());
}

#[test]
fn divergence_aborts_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let ck = common::checkpoint(dir.path(), 0);
    let data = fixture(16, 13);
    let cfg = TrainConfig { learning_rate: 1e30, epochs: 5, max_len: 32, batch_size: 4, ..Default::default() };
    let mut model = Classifier::init(&ck, Task::Genre, genre_classes(), cfg).unwrap();
    match model.fit(&data, &[], &mut |_| Ok(())) {
        Err(Error::Diverged { epoch, step, .. }) => assert!(epoch >= 1 && step >= 1),
        other => panic!("expected divergence, got {:?}", other.map(|_| ())),
    }
}

proptest! {
    #[test]
    fn distribution_sums_to_one(logits in prop::collection::vec(-50.0f64..50.0, 2..6)) {
        let classes: Vec<String> = (0..logits.len()).map(|i| format!("c{i}")).collect();
        let d = Distribution::from_logits(&classes, &logits);
        let total: f64 = d.probs.values().sum();
        prop_assert!((total - 1.0).abs() <= 1e-6);
        prop_assert!(d.probs.values().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn distribution_is_shift_invariant(logits in prop::collection::vec(-30.0f64..30.0, 2..6), shift in -1e3f64..1e3) {
        let classes: Vec<String> = (0..logits.len()).map(|i| format!("c{i}")).collect();
        let a = Distribution::from_logits(&classes, &logits);
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        let b = Distribution::from_logits(&classes, &shifted);
        for c in &classes {
            prop_assert!((a.get(c) - b.get(c)).abs() <= 1e-6);
        }
    }
}
