use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use lyricsense_core::analytics::{build_eda_report, Lexicon, Stopwords};
use lyricsense_core::corpus::io::{read_dataset, save_dataset, CurationManifest};
use lyricsense_core::corpus::synthetic::{generate, vocabulary, SyntheticSpec};
use lyricsense_core::corpus::{
    clean_lyrics, curate, load_corpus, load_corpus_from, write_corpus, CuratedDataset, CuratedEntry, SongRecord, Split,
    Task,
};
use lyricsense_core::metrics::rmse;
use lyricsense_core::regressor::{benchmark_on_split, train_regressor, Estimator, RegressorKind, FIRST_YEAR, LAST_YEAR};
use lyricsense_model::cache::{embed_corpus, CacheStats, EmbeddingCache, EmbeddingMatrix};
use lyricsense_model::checkpoint::write_synthetic_checkpoint;
use lyricsense_model::classifier::{ARTIFACT_FILE, METRICS_FILE, TRAIN_LOG_FILE};
use lyricsense_model::year::YEAR_ARTIFACT_FILE;
use lyricsense_model::{train_classifier, Checkpoint, Classifier, Embed, Encoder, YearArtifact};
use lyricsense_service::{load_registry, Predictor, RegistryConfig, ServiceConfig};
use ndarray::{Array1, Array2};

use crate::config::PipelineConfig;
use crate::failure::Failure;
use crate::manifest::RunManifest;

/// The 500-row synthetic corpus (`generate` with 500 rows, seed 2024).
pub const BUNDLED_CORPUS: &str = include_str!("../fixtures/synthetic_500.csv");
const VOCAB_LIMIT: usize = 30_000;

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_vec_pretty(value)?).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn load_records(cfg: &PipelineConfig, manifest: &mut RunManifest) -> Result<Vec<SongRecord>, Failure> {
    let (records, report) = match &cfg.paths.corpus {
        Some(path) => {
            manifest.input(path)?;
            load_corpus(path, &cfg.columns)?
        }
        None => {
            info!("no corpus given; using the bundled 500-row synthetic fixture");
            load_corpus_from(BUNDLED_CORPUS.as_bytes(), &cfg.columns)?
        }
    };
    if report.rows_rejected > 0 {
        log::warn!("{} of {} corpus rows rejected", report.rows_rejected, report.rows_read);
    }
    Ok(records)
}

fn dataset_path(cfg: &PipelineConfig, task: Task) -> PathBuf {
    cfg.datasets_dir().join(format!("{task}.csv"))
}

fn load_dataset(cfg: &PipelineConfig, task: Task, manifest: &mut RunManifest) -> Result<CuratedDataset, Failure> {
    let path = dataset_path(cfg, task);
    if !path.is_file() {
        return Err(Failure::new(
            "missing_dataset",
            format!("{} not found; run `curate --task {task}` first", path.display()),
        ));
    }
    manifest.input(&path)?;
    let entries = read_dataset(&path, task)?;
    let meta = cfg.datasets_dir().join(format!("{task}.manifest.json"));
    let (config, seed) = match CurationManifest::read(&meta) {
        Ok(m) => (m.config, m.seed),
        Err(_) => (cfg.curation.clone(), cfg.seed),
    };
    Ok(CuratedDataset {
        task,
        entries,
        config,
        seed,
        warnings: Vec::new(),
        created_at: String::new(),
    })
}

fn checkpoint(cfg: &PipelineConfig, manifest: &mut RunManifest) -> Result<Checkpoint, Failure> {
    let dir = cfg.encoder_dir();
    if !dir.join("config.json").is_file() {
        return Err(Failure::new(
            "checkpoint",
            format!("no checkpoint in {}; run `init-checkpoint` or place a DistilBERT checkpoint there", dir.display()),
        ));
    }
    let ck = Checkpoint::load(&dir)?;
    manifest.input(&dir.join("model.safetensors"))?;
    Ok(ck)
}

pub fn synth_corpus(cfg: &PipelineConfig, rows: usize, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("synth-corpus", None, cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.data_dir.clone());
    fs::create_dir_all(&dir)?;
    let path = dir.join("corpus.csv");
    let records = generate(&SyntheticSpec { rows, seed: cfg.seed });
    write_corpus(fs::File::create(&path)?, &records)?;
    m.output(&path)?;
    m.summary = serde_json::json!({ "rows": rows });
    m.finish(&dir)?;
    println!("{}", path.display());
    Ok(())
}

pub fn init_checkpoint(cfg: &PipelineConfig, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("init-checkpoint", None, cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.encoder_dir());
    let records = load_records(cfg, &mut m)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &records {
        for w in lyricsense_core::analytics::tokenize(&clean_lyrics(&r.lyrics)) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    let mut words: Vec<(String, usize)> = counts.into_iter().collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut vocab: Vec<String> = vocabulary().into_iter().map(str::to_string).collect();
    vocab.extend(words.into_iter().take(VOCAB_LIMIT).map(|(w, _)| w));
    let ck = write_synthetic_checkpoint(&dir, &cfg.checkpoint, vocab)?;
    for f in ["config.json", "vocab.txt", "model.safetensors"] {
        m.output(&dir.join(f))?;
    }
    m.summary = serde_json::json!({ "checkpoint_id": ck.id, "vocab_size": ck.config.vocab_size, "dim": ck.config.dim });
    m.finish(&dir)?;
    println!("{}", ck.id);
    Ok(())
}

pub fn curate_cmd(cfg: &PipelineConfig, task: Task, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("curate", Some(task.as_str()), cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.datasets_dir());
    let records = load_records(cfg, &mut m)?;
    let ds = curate(task, &records, &cfg.curation, cfg.seed)?;
    for w in &ds.warnings {
        log::warn!("{w}");
    }
    let cm = save_dataset(&dir, &ds)?;
    m.output(&dir.join(format!("{task}.csv")))?;
    m.output(&dir.join(format!("{task}.manifest.json")))?;
    m.summary = serde_json::json!({
        "records": cm.records,
        "label_counts": cm.label_counts,
        "split_counts": cm.split_counts,
        "warnings": cm.warnings,
    });
    m.finish(&dir)?;
    info!("{task}: {} records written to {}", cm.records, dir.display());
    Ok(())
}

pub fn eda(cfg: &PipelineConfig, out: Option<&Path>, top_k: usize) -> Result<(), Failure> {
    let mut m = RunManifest::begin("eda", None, cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.reports_dir.join("eda"));
    let records = load_records(cfg, &mut m)?;
    let records = lyricsense_core::corpus::apply_base_filters(&records, &cfg.curation.base);
    let report = build_eda_report(&records, &Lexicon::bundled(), &Stopwords::bundled(), top_k)?;
    report.write(&dir)?;
    for entry in fs::read_dir(&dir)? {
        let p = entry?.path();
        if p.is_file() && !p.to_string_lossy().ends_with(".run.json") {
            m.output(&p)?;
        }
    }
    m.outputs.sort_by(|a, b| a.path.cmp(&b.path));
    m.summary = serde_json::json!({ "records": report.records, "notes": report.soft_checks() });
    m.finish(&dir)?;
    Ok(())
}

fn embed_dataset(
    cfg: &PipelineConfig,
    encoder: &Encoder,
    ds: &CuratedDataset,
    dir: &Path,
) -> Result<(EmbeddingMatrix, CacheStats, EmbeddingCache), Failure> {
    let cache = EmbeddingCache::new(dir, ds.task.as_str());
    let records: Vec<(String, String)> = ds
        .entries
        .iter()
        .map(|e| (e.record.id.clone(), clean_lyrics(&e.record.lyrics)))
        .collect();
    let (matrix, stats) = embed_corpus(encoder, &records, &cache, cfg.encoder.batch_size)?;
    info!(
        "{}: {} rows, {} cache hits, {} misses, {} batches",
        ds.task,
        matrix.rows(),
        stats.hits,
        stats.misses,
        stats.batches
    );
    Ok((matrix, stats, cache))
}

pub fn embed(cfg: &PipelineConfig, task: Task, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("embed", Some(task.as_str()), cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.cache_dir());
    let ds = load_dataset(cfg, task, &mut m)?;
    let encoder = Encoder::new(&checkpoint(cfg, &mut m)?, cfg.encoder.max_len)?;
    let (matrix, stats, cache) = embed_dataset(cfg, &encoder, &ds, &dir)?;
    m.output(cache.matrix_path())?;
    m.output(cache.index_path())?;
    m.summary = serde_json::json!({
        "rows": matrix.rows(),
        "hidden_size": matrix.hidden_size,
        "checkpoint_id": encoder.checkpoint_id(),
        "cache": stats,
    });
    m.finish(&dir)?;
    Ok(())
}

pub fn train_classifier_cmd(cfg: &PipelineConfig, task: Task, epochs: Option<usize>, out: Option<&Path>) -> Result<(), Failure> {
    let command = format!("train-{task}");
    let mut m = RunManifest::begin(&command, None, cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.model_dir.join(task.as_str()));
    let ds = load_dataset(cfg, task, &mut m)?;
    let ck = checkpoint(cfg, &mut m)?;
    let mut tc = cfg.train.clone();
    if let Some(e) = epochs {
        tc.epochs = e;
    }
    let mut model = train_classifier(&ck, &ds, &tc, &mut |log| {
        info!(
            "{task} epoch {}: train loss {:.4}, accuracy {:.3}, validation loss {}",
            log.epoch,
            log.train_loss,
            log.train_accuracy,
            log.validation_loss.map_or("-".into(), |v| format!("{v:.4}"))
        );
        Ok(())
    })?;
    let meta = model.save(&dir)?;
    for f in ["model.safetensors", "config.json", "vocab.txt", ARTIFACT_FILE, METRICS_FILE, TRAIN_LOG_FILE] {
        m.output(&dir.join(f))?;
    }
    m.summary = serde_json::json!({
        "artifact_id": meta.artifact_id,
        "best_epoch": meta.best_epoch,
        "epochs_run": meta.epochs_run,
        "final_validation_accuracy": model.metrics().final_validation_accuracy,
        "final_validation_loss": model.metrics().final_validation_loss,
    });
    m.finish(&dir)?;
    println!("{}", meta.artifact_id);
    Ok(())
}

struct YearData {
    x_train: Array2<f64>,
    y_train: Array1<f64>,
    x_test: Array2<f64>,
    y_test: Array1<f64>,
}

fn year_data(ds: &CuratedDataset, matrix: &EmbeddingMatrix) -> Result<YearData, Failure> {
    let h = matrix.hidden_size;
    let years: Vec<i32> = ds
        .entries
        .iter()
        .map(|e| {
            e.label
                .year()
                .filter(|y| (FIRST_YEAR..=LAST_YEAR).contains(y))
                .ok_or_else(|| Failure::new("dataset", format!("{}: year label outside {FIRST_YEAR}-{LAST_YEAR}", e.record.id)))
        })
        .collect::<Result<_, _>>()?;
    let pick = |want: &dyn Fn(&CuratedEntry) -> bool| {
        let idx: Vec<usize> = (0..ds.entries.len()).filter(|&i| want(&ds.entries[i])).collect();
        let x = Array2::from_shape_fn((idx.len(), h), |(r, c)| matrix.row(idx[r])[c] as f64);
        let y = Array1::from_iter(idx.iter().map(|&i| years[i] as f64));
        (x, y)
    };
    let (x_train, y_train) = pick(&|e| matches!(e.split, Some(Split::Train) | Some(Split::Validation)));
    let (x_test, y_test) = pick(&|e| e.split == Some(Split::Test));
    if y_test.is_empty() || y_train.is_empty() {
        return Err(Failure::new("dataset", "year dataset needs train and test splits"));
    }
    Ok(YearData {
        x_train,
        y_train,
        x_test,
        y_test,
    })
}

pub fn train_year(cfg: &PipelineConfig, regressor: Option<&str>, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("train-year", None, cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.model_dir.join("year"));
    let ds = load_dataset(cfg, Task::Year, &mut m)?;
    let encoder = Encoder::new(&checkpoint(cfg, &mut m)?, cfg.encoder.max_len)?;
    let (matrix, _, _) = embed_dataset(cfg, &encoder, &ds, &cfg.cache_dir())?;
    let data = year_data(&ds, &matrix)?;
    let mut spec = cfg.year_regressor.clone();
    if let Some(kind) = regressor {
        spec.kind = kind.parse::<RegressorKind>()?;
        spec.hyperparams.clear();
    }
    let artifact = train_regressor(data.x_train.view(), data.y_train.view(), &spec)?;
    let pred = artifact.predict(data.x_test.view())?;
    let test_rmse = rmse(&data.y_test.to_vec(), &pred.to_vec())?;
    let year = YearArtifact {
        checkpoint_id: encoder.checkpoint_id().to_string(),
        max_len: encoder.max_len(),
        regressor: artifact,
    };
    let path = dir.join(YEAR_ARTIFACT_FILE);
    year.save(&path)?;
    let metrics = serde_json::json!({
        "kind": spec.kind.as_str(),
        "test_rmse": test_rmse,
        "n_train": data.y_train.len(),
        "n_test": data.y_test.len(),
        "warnings": year.regressor.warnings,
    });
    let metrics_path = dir.join("metrics.json");
    write_json(&metrics_path, &metrics)?;
    m.output(&path)?;
    m.output(&metrics_path)?;
    m.summary = metrics;
    m.finish(&dir)?;
    info!("year regressor {} test RMSE {test_rmse:.3}", spec.kind);
    Ok(())
}

pub fn benchmark_year(cfg: &PipelineConfig, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("benchmark-year", None, cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.reports_dir.clone());
    let ds = load_dataset(cfg, Task::Year, &mut m)?;
    let encoder = Encoder::new(&checkpoint(cfg, &mut m)?, cfg.encoder.max_len)?;
    let (matrix, _, _) = embed_dataset(cfg, &encoder, &ds, &cfg.cache_dir())?;
    let data = year_data(&ds, &matrix)?;
    let estimators: Vec<&dyn Estimator<f64>> = cfg.regressors.iter().map(|s| s as &dyn Estimator<f64>).collect();
    let mut table = benchmark_on_split(
        data.x_train.view(),
        data.y_train.view(),
        data.x_test.view(),
        data.y_test.view(),
        &estimators,
    )?;
    table.split_seed = Some(ds.seed);
    table.notes.push("train and validation splits fit, test split scored".into());
    fs::create_dir_all(&dir)?;
    let csv = dir.join("benchmark_year.csv");
    let txt = dir.join("benchmark_year.txt");
    let json = dir.join("benchmark_year.json");
    table.write_csv(&csv)?;
    table.write_text(&txt)?;
    write_json(&json, &table)?;
    for p in [&csv, &txt, &json] {
        m.output(p)?;
    }
    m.summary = serde_json::json!({
        "ranking": table.rows.iter().map(|r| (r.kind.clone(), r.rmse)).collect::<Vec<_>>(),
    });
    m.finish(&dir)?;
    print!("{table}");
    Ok(())
}

pub fn evaluate(cfg: &PipelineConfig, task: Task, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("evaluate", Some(task.as_str()), cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.reports_dir.clone());
    let ds = load_dataset(cfg, task, &mut m)?;
    let doc = match task {
        Task::Genre | Task::Success => {
            let model_dir = cfg.paths.model_dir.join(task.as_str());
            let model = Classifier::load(&model_dir)?;
            m.input(&model_dir.join("model.safetensors"))?;
            let classes: Vec<String> = ds.entries.iter().map(|e| e.label.to_class()).collect();
            let texts: Vec<String> = ds.entries.iter().map(|e| clean_lyrics(&e.record.lyrics)).collect();
            let test: Vec<(&str, &str)> = ds
                .entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.split == Some(Split::Test))
                .map(|(i, _)| (texts[i].as_str(), classes[i].as_str()))
                .collect();
            let report = model.evaluate(&test, cfg.encoder.batch_size)?;
            serde_json::json!({
                "task": task.as_str(),
                "split": "test",
                "artifact_id": model.artifact_id(),
                "n": test.len(),
                "report": report,
            })
        }
        Task::Year => {
            let path = cfg.paths.model_dir.join("year").join(YEAR_ARTIFACT_FILE);
            let year = YearArtifact::load(&path)?;
            m.input(&path)?;
            let encoder = Encoder::new(&checkpoint(cfg, &mut m)?, year.max_len)?;
            year.check_encoder(&encoder)?;
            let (matrix, _, _) = embed_dataset(cfg, &encoder, &ds, &cfg.cache_dir())?;
            let data = year_data(&ds, &matrix)?;
            let pred = year.regressor.predict(data.x_test.view())?;
            serde_json::json!({
                "task": "year",
                "split": "test",
                "artifact_id": lyricsense_model::checkpoint::file_id(&path)?,
                "n": data.y_test.len(),
                "rmse": rmse(&data.y_test.to_vec(), &pred.to_vec())?,
            })
        }
    };
    let path = dir.join(format!("evaluation_{task}.json"));
    write_json(&path, &doc)?;
    m.output(&path)?;
    m.summary = doc.clone();
    m.finish(&dir)?;
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

pub fn predict(cfg: &PipelineConfig, lyrics: &str, server: Option<&str>, out: Option<&Path>) -> Result<(), Failure> {
    let mut m = RunManifest::begin("predict", None, cfg);
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.paths.reports_dir.clone());
    let result: serde_json::Value = match server {
        Some(base) => {
            let url = format!("{}/api/predict", base.trim_end_matches('/'));
            let res = reqwest::blocking::Client::new()
                .post(&url)
                .json(&serde_json::json!({ "lyrics": lyrics }))
                .send()?;
            let status = res.status();
            let body: serde_json::Value = res.json()?;
            if !status.is_success() {
                let code = body["code"].as_str().unwrap_or("http").to_string();
                let message = body["message"].as_str().unwrap_or("request failed").to_string();
                return Err(Failure::new(&code, format!("{url}: {status}: {message}")));
            }
            body
        }
        None => {
            let registry = load_registry(&RegistryConfig::from_model_dir(&cfg.paths.model_dir))?;
            if !registry.missing().is_empty() {
                return Err(Failure::new(
                    "model_unavailable",
                    format!("models not found in {}: {}", cfg.paths.model_dir.display(), registry.missing().join(", ")),
                ));
            }
            let start = std::time::Instant::now();
            let mut r = registry.predict(lyrics)?;
            r.latency_ms = start.elapsed().as_secs_f64() * 1000.0;
            serde_json::to_value(r)?
        }
    };
    m.summary = serde_json::json!({ "server": server, "model_ids": result["model_ids"] });
    m.finish(&dir)?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

pub fn serve(cfg: &PipelineConfig, port: Option<u16>) -> Result<(), Failure> {
    let m = RunManifest::begin("serve", None, cfg);
    m.finish(&cfg.paths.reports_dir)?;
    let mut sc = ServiceConfig::from_env(cfg.paths.model_dir.clone()).map_err(|e| Failure::new("config", e))?;
    if std::env::var_os("PORT").is_none() {
        sc.port = cfg.service.port;
    }
    if let Some(p) = port {
        sc.port = p;
    }
    sc.body_limit = cfg.service.body_limit;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(lyricsense_service::serve(sc))?;
    Ok(())
}
