//! Curated dataset files and their curation manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::curate::{CuratedDataset, CuratedEntry, CurationConfig};
use super::record::{Label, SongRecord, Task};
use crate::error::{Error, Result};

const COLUMNS: [&str; 10] = [
    "id", "title", "artist", "tag", "year", "views", "language", "lyrics", "label", "split",
];

pub fn write_dataset_to<W: Write>(out: W, dataset: &CuratedDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for e in &dataset.entries {
        let r = &e.record;
        w.write_record([
            r.id.as_str(),
            &r.title,
            &r.artist,
            &r.genre,
            &r.year.to_string(),
            &r.views.to_string(),
            &r.language,
            &r.lyrics,
            &e.label.to_class(),
            e.split.map_or("", |s| s.as_str()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<dataset writer>", e))
}

pub fn write_dataset(path: &Path, dataset: &CuratedDataset) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(std::io::BufWriter::new(file), dataset)
}

/// Reads a curated dataset file written by [`write_dataset`].
pub fn read_dataset(path: &Path, task: Task) -> Result<Vec<CuratedEntry>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                field: name.into(),
                column: name.into(),
            })
    };
    let idx: Vec<usize> = COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let get = |i: usize| row.get(idx[i]).unwrap_or_default();
        let bad = |what: &str| Error::InvalidInput(format!("{}: row {}: bad {what}", path.display(), n + 1));
        let record = SongRecord {
            id: get(0).into(),
            title: get(1).into(),
            artist: get(2).into(),
            genre: get(3).into(),
            year: get(4).parse().map_err(|_| bad("year"))?,
            views: get(5).parse().map_err(|_| bad("views"))?,
            language: get(6).into(),
            lyrics: get(7).into(),
        };
        let label = Label::parse(task, get(8))?;
        let split = match get(9) {
            "" => None,
            s => Some(s.parse()?),
        };
        entries.push(CuratedEntry {
            record,
            label,
            split,
        });
    }
    Ok(entries)
}

/// Sidecar describing how a dataset was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationManifest {
    pub task: Task,
    pub seed: u64,
    pub config: CurationConfig,
    pub records: usize,
    pub label_counts: BTreeMap<String, usize>,
    pub split_counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
    /// SHA-256 of the dataset file contents.
    pub dataset_digest: String,
    pub created_at: String,
    pub notes: Vec<String>,
}

impl CurationManifest {
    pub fn new(dataset: &CuratedDataset, dataset_bytes: &[u8]) -> Self {
        Self {
            task: dataset.task,
            seed: dataset.seed,
            config: dataset.config.clone(),
            records: dataset.len(),
            label_counts: dataset.label_counts(),
            split_counts: dataset.split_counts(),
            warnings: dataset.warnings.clone(),
            dataset_digest: hex::encode(Sha256::digest(dataset_bytes)),
            created_at: dataset.created_at.clone(),
            notes: vec![format!(
                "year filter is inclusive: year >= {} (source wording 'older than 1960' read as 'from 1960 on')",
                dataset.config.base.min_year
            )],
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// Writes `<dir>/<task>.csv` and `<dir>/<task>.manifest.json`.
pub fn save_dataset(dir: &Path, dataset: &CuratedDataset) -> Result<CurationManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut bytes = Vec::new();
    write_dataset_to(&mut bytes, dataset)?;
    let csv_path = dir.join(format!("{}.csv", dataset.task));
    fs::write(&csv_path, &bytes).map_err(|e| Error::io(&csv_path, e))?;
    let manifest = CurationManifest::new(dataset, &bytes);
    manifest.write(&dir.join(format!("{}.manifest.json", dataset.task)))?;
    Ok(manifest)
}
