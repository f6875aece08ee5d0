//! Persistent embedding cache: `<name>.f32` holds a row-major little-endian
//! f32 matrix, `<name>.index` a JSON sidecar describing its rows.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use memmap2::Mmap;
use serde::{Deserialize, Serialize};

use crate::encoder::Embed;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRow {
    pub id: String,
    pub text_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheIndex {
    pub checkpoint_id: String,
    pub hidden_size: usize,
    pub max_len: usize,
    pub rows: Vec<IndexRow>,
}

/// An `n × hidden_size` matrix with one row per record.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub hidden_size: usize,
    pub data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.hidden_size..(i + 1) * self.hidden_size]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    /// Forward batches actually run.
    pub batches: usize,
    /// An existing cache was unreadable and ignored.
    pub rebuilt: bool,
}

pub struct EmbeddingCache {
    matrix_path: PathBuf,
    index_path: PathBuf,
}

fn put(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl EmbeddingCache {
    pub fn new(dir: &Path, name: &str) -> Self {
        Self {
            matrix_path: dir.join(format!("{name}.f32")),
            index_path: dir.join(format!("{name}.index")),
        }
    }

    pub fn matrix_path(&self) -> &Path {
        &self.matrix_path
    }

    pub fn index_path(&self) -> &Path {
        &self.index_path
    }

    /// Reads the cache; `Ok(None)` when absent, `Err` when present but corrupt.
    pub fn read(&self) -> Result<Option<(CacheIndex, EmbeddingMatrix)>> {
        if !self.index_path.exists() && !self.matrix_path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&self.index_path).map_err(|e| Error::io(&self.index_path, e))?;
        let index: CacheIndex = serde_json::from_str(&text)?;
        let file = File::open(&self.matrix_path).map_err(|e| Error::io(&self.matrix_path, e))?;
        let expected = index.rows.len() * index.hidden_size * 4;
        let len = file.metadata().map_err(|e| Error::io(&self.matrix_path, e))?.len() as usize;
        if len != expected {
            return Err(Error::Mismatch(format!(
                "{} holds {len} bytes, index implies {expected}",
                self.matrix_path.display()
            )));
        }
        let data = if expected == 0 {
            Vec::new()
        } else {
            // SAFETY: the file is only replaced by rename, never written in place.
            let map = unsafe { Mmap::map(&file) }.map_err(|e| Error::io(&self.matrix_path, e))?;
            map.chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect::<Vec<f32>>()
        };
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cached embedding"));
        }
        let matrix = EmbeddingMatrix {
            ids: index.rows.iter().map(|r| r.id.clone()).collect(),
            hidden_size: index.hidden_size,
            data,
        };
        Ok(Some((index, matrix)))
    }

    pub fn write(&self, index: &CacheIndex, matrix: &EmbeddingMatrix) -> Result<()> {
        if let Some(dir) = self.matrix_path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut bytes = Vec::with_capacity(matrix.data.len() * 4);
        for v in &matrix.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        put(&self.matrix_path, &bytes)?;
        put(&self.index_path, serde_json::to_string_pretty(index)?.as_bytes())
    }
}

/// One embedding per `(id, text)` in input order, reusing cached rows whose
/// text hash matches under the same checkpoint, hidden size and `max_len`.
pub fn embed_corpus<E: Embed + ?Sized>(
    encoder: &E,
    records: &[(String, String)],
    cache: &EmbeddingCache,
    batch_size: usize,
) -> Result<(EmbeddingMatrix, CacheStats)> {
    if batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be positive".into()));
    }
    let h = encoder.hidden_size();
    let mut stats = CacheStats::default();
    let mut known: HashMap<String, Vec<f32>> = HashMap::new();
    let mut previous = None;
    match cache.read() {
        Ok(Some((index, matrix))) => {
            if index.checkpoint_id == encoder.checkpoint_id() && index.hidden_size == h && index.max_len == encoder.max_len() {
                for (i, r) in index.rows.iter().enumerate() {
                    known.entry(r.text_hash.clone()).or_insert_with(|| matrix.row(i).to_vec());
                }
            } else {
                log::info!(
                    "cache {} built for {} (max_len {}); not reused",
                    cache.index_path.display(),
                    index.checkpoint_id,
                    index.max_len
                );
            }
            previous = Some(index);
        }
        Ok(None) => {}
        Err(e) => {
            log::warn!("embedding cache {} unreadable ({e}); rebuilding", cache.index_path.display());
            stats.rebuilt = true;
        }
    }

    let hashes: Vec<String> = records.iter().map(|(_, t)| crate::encoder::text_hash(t)).collect();
    let mut pending: Vec<usize> = Vec::new();
    let mut queued = std::collections::HashSet::new();
    for (i, hsh) in hashes.iter().enumerate() {
        if known.contains_key(hsh) {
            stats.hits += 1;
        } else {
            stats.misses += 1;
            if queued.insert(hsh.clone()) {
                pending.push(i);
            }
        }
    }
    for chunk in pending.chunks(batch_size) {
        let texts: Vec<&str> = chunk.iter().map(|&i| records[i].1.as_str()).collect();
        let vectors = encoder.embed_texts(&texts)?;
        stats.batches += 1;
        for (&i, v) in chunk.iter().zip(vectors) {
            if v.values.len() != h {
                return Err(Error::Mismatch(format!("encoder returned {} values, expected {h}", v.values.len())));
            }
            if v.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("embedding batch"));
            }
            known.insert(hashes[i].clone(), v.values);
        }
    }

    let mut data = Vec::with_capacity(records.len() * h);
    for hsh in &hashes {
        data.extend_from_slice(&known[hsh]);
    }
    let matrix = EmbeddingMatrix {
        ids: records.iter().map(|(id, _)| id.clone()).collect(),
        hidden_size: h,
        data,
    };
    let index = CacheIndex {
        checkpoint_id: encoder.checkpoint_id().to_string(),
        hidden_size: h,
        max_len: encoder.max_len(),
        rows: records
            .iter()
            .zip(&hashes)
            .map(|((id, _), hsh)| IndexRow {
                id: id.clone(),
                text_hash: hsh.clone(),
            })
            .collect(),
    };
    if previous.as_ref() != Some(&index) {
        cache.write(&index, &matrix)?;
    }
    Ok((matrix, stats))
}
