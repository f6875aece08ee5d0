use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clean::{clean_lyrics, word_count};
use super::record::{Genre, Label, SongRecord, Split, Task};
use super::split::{assign_splits, SplitRatios};
use crate::error::Result;

/// Filters applied to the raw corpus before any task-specific curation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseFilterConfig {
    /// Inclusive lower bound on release year.
    pub min_year: i32,
    pub language: String,
    pub drop_tags: Vec<String>,
}

impl Default for BaseFilterConfig {
    fn default() -> Self {
        Self {
            min_year: 1960,
            language: "en".into(),
            drop_tags: vec!["misc".into()],
        }
    }
}

impl BaseFilterConfig {
    pub fn admits(&self, r: &SongRecord) -> bool {
        !self.drop_tags.iter().any(|t| t == &r.genre)
            && r.genre.parse::<Genre>().is_ok()
            && r.language == self.language
            && r.year >= self.min_year
    }
}

/// Keeps records whose tag is a known non-dropped genre, whose language
/// matches and whose year is at least `min_year`.
pub fn apply_base_filters(records: &[SongRecord], config: &BaseFilterConfig) -> Vec<SongRecord> {
    records.iter().filter(|r| config.admits(r)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenreCuration {
    /// Records need strictly more words than this.
    pub min_words_exclusive: usize,
    pub min_views: u64,
    pub per_genre_quota: usize,
}

impl Default for GenreCuration {
    fn default() -> Self {
        Self {
            min_words_exclusive: 150,
            min_views: 1_000,
            per_genre_quota: 10_000,
        }
    }
}

impl GenreCuration {
    /// Eligibility of a record whose lyrics are already cleaned.
    pub fn admits(&self, r: &SongRecord) -> bool {
        r.genre.parse::<Genre>().is_ok()
            && r.views >= self.min_views
            && word_count(&r.lyrics) > self.min_words_exclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuccessCuration {
    /// Views at or above this are a success.
    pub threshold: u64,
    pub per_class: usize,
    pub min_words_exclusive: usize,
    pub min_views: Option<u64>,
}

impl Default for SuccessCuration {
    fn default() -> Self {
        Self {
            threshold: 100_000,
            per_class: 8_000,
            min_words_exclusive: 100,
            min_views: None,
        }
    }
}

impl SuccessCuration {
    pub fn admits(&self, r: &SongRecord) -> bool {
        word_count(&r.lyrics) > self.min_words_exclusive
            && self.min_views.is_none_or(|v| r.views >= v)
    }

    pub fn label(&self, views: u64) -> bool {
        views >= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct YearCuration {
    pub first_year: i32,
    pub last_year: i32,
    pub per_year: usize,
    pub min_views: u64,
    pub min_words_exclusive: usize,
}

impl Default for YearCuration {
    fn default() -> Self {
        Self {
            first_year: 1960,
            last_year: 2022,
            per_year: 300,
            min_views: 1_000,
            min_words_exclusive: 100,
        }
    }
}

impl YearCuration {
    pub fn admits(&self, r: &SongRecord) -> bool {
        (self.first_year..=self.last_year).contains(&r.year)
            && r.views >= self.min_views
            && word_count(&r.lyrics) > self.min_words_exclusive
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub base: BaseFilterConfig,
    pub genre: GenreCuration,
    pub success: SuccessCuration,
    pub year: YearCuration,
    pub splits: SplitRatios,
}

impl CurationConfig {
    /// Re-evaluates the task's eligibility predicate on a curated record.
    pub fn admits(&self, task: Task, r: &SongRecord) -> bool {
        let base = self.base.admits(r) && !r.lyrics.is_empty();
        base && match task {
            Task::Genre => self.genre.admits(r),
            Task::Success => self.success.admits(r),
            Task::Year => self.year.admits(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuratedEntry {
    pub record: SongRecord,
    pub label: Label,
    pub split: Option<Split>,
}

/// A balanced, task-specific sample with optional split assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedDataset {
    pub task: Task,
    pub entries: Vec<CuratedEntry>,
    pub config: CurationConfig,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub created_at: String,
}

impl CuratedDataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Count per label class, keyed by the textual class.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.label.to_class()).or_insert(0) += 1;
        }
        counts
    }

    pub fn split_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            let key = e.split.map_or("unassigned", Split::as_str);
            *counts.entry(key.to_string()).or_insert(0) += 1;
        }
        counts
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &CuratedEntry> {
        self.entries.iter().filter(move |e| e.split == Some(split))
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

// Cleans lyrics, drops duplicate ids (first wins after a stable sort by id)
// and keeps records passing `admit`.
fn eligible<F>(records: &[SongRecord], warnings: &mut Vec<String>, admit: F) -> Vec<SongRecord>
where
    F: Fn(&SongRecord) -> bool,
{
    let mut cleaned: Vec<SongRecord> = records
        .iter()
        .map(|r| SongRecord {
            lyrics: clean_lyrics(&r.lyrics),
            ..r.clone()
        })
        .filter(|r| !r.lyrics.is_empty() && admit(r))
        .collect();
    cleaned.sort_by(|a, b| a.id.cmp(&b.id));
    let mut seen = HashSet::new();
    let before = cleaned.len();
    cleaned.retain(|r| seen.insert(r.id.clone()));
    if cleaned.len() < before {
        warnings.push(format!(
            "dropped {} records with duplicate ids",
            before - cleaned.len()
        ));
    }
    cleaned
}

// Draws `quota` records from an id-sorted pool using a per-stratum stream.
fn sample(mut pool: Vec<SongRecord>, quota: usize, seed: u64, stream: u64) -> Vec<SongRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    pool.shuffle(&mut rng);
    pool.truncate(quota);
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    pool
}

fn dataset(
    task: Task,
    entries: Vec<CuratedEntry>,
    config: &CurationConfig,
    seed: u64,
    warnings: Vec<String>,
) -> CuratedDataset {
    for w in &warnings {
        log::warn!("{task}: {w}");
    }
    CuratedDataset {
        task,
        entries,
        config: config.clone(),
        seed,
        warnings,
        created_at: now(),
    }
}

/// Per-genre balanced sample of long, viewed songs.
pub fn curate_genre_dataset(
    records: &[SongRecord],
    config: &CurationConfig,
    seed: u64,
) -> CuratedDataset {
    let cfg = &config.genre;
    let mut warnings = Vec::new();
    let pool = eligible(records, &mut warnings, |r| config.admits(Task::Genre, r));
    let mut by_genre: BTreeMap<Genre, Vec<SongRecord>> = BTreeMap::new();
    for r in pool {
        let g = r.genre.parse::<Genre>().expect("admitted records have a known genre");
        by_genre.entry(g).or_default().push(r);
    }
    let mut entries = Vec::new();
    for (i, g) in Genre::ALL.iter().enumerate() {
        let supply = by_genre.remove(g).unwrap_or_default();
        if supply.len() < cfg.per_genre_quota {
            warnings.push(format!(
                "genre {g}: only {} eligible records (quota {})",
                supply.len(),
                cfg.per_genre_quota
            ));
        }
        entries.extend(
            sample(supply, cfg.per_genre_quota, seed, i as u64)
                .into_iter()
                .map(|record| CuratedEntry {
                    record,
                    label: Label::Genre(*g),
                    split: None,
                }),
        );
    }
    dataset(Task::Genre, entries, config, seed, warnings)
}

/// Balanced success/fail sample split at the view threshold.
pub fn curate_success_dataset(
    records: &[SongRecord],
    config: &CurationConfig,
    seed: u64,
) -> CuratedDataset {
    let cfg = &config.success;
    let mut warnings = Vec::new();
    let pool = eligible(records, &mut warnings, |r| config.admits(Task::Success, r));
    let (success, fail): (Vec<_>, Vec<_>) = pool.into_iter().partition(|r| cfg.label(r.views));
    let n = cfg.per_class.min(success.len()).min(fail.len());
    if n < cfg.per_class {
        warnings.push(format!(
            "insufficient supply (success {}, fail {}); sampling {n} per class (quota {})",
            success.len(),
            fail.len(),
            cfg.per_class
        ));
    }
    let mut entries = Vec::new();
    for (stream, (pool, label)) in [(fail, false), (success, true)].into_iter().enumerate() {
        entries.extend(
            sample(pool, n, seed, stream as u64)
                .into_iter()
                .map(|record| CuratedEntry {
                    record,
                    label: Label::Success(label),
                    split: None,
                }),
        );
    }
    dataset(Task::Success, entries, config, seed, warnings)
}

/// Per-year balanced sample over the configured year range.
pub fn curate_year_dataset(
    records: &[SongRecord],
    config: &CurationConfig,
    seed: u64,
) -> CuratedDataset {
    let cfg = &config.year;
    let mut warnings = Vec::new();
    let pool = eligible(records, &mut warnings, |r| config.admits(Task::Year, r));
    let mut by_year: BTreeMap<i32, Vec<SongRecord>> = BTreeMap::new();
    for r in pool {
        by_year.entry(r.year).or_default().push(r);
    }
    let mut entries = Vec::new();
    for year in cfg.first_year..=cfg.last_year {
        let supply = by_year.remove(&year).unwrap_or_default();
        if supply.is_empty() {
            warnings.push(format!("year {year}: no eligible records"));
        } else if supply.len() < cfg.per_year {
            warnings.push(format!(
                "year {year}: only {} eligible records (quota {})",
                supply.len(),
                cfg.per_year
            ));
        }
        let stream = (year - cfg.first_year) as u64;
        entries.extend(
            sample(supply, cfg.per_year, seed, stream)
                .into_iter()
                .map(|record| CuratedEntry {
                    record,
                    label: Label::Year(year),
                    split: None,
                }),
        );
    }
    dataset(Task::Year, entries, config, seed, warnings)
}

/// Curates the task's dataset and assigns stratified splits.
pub fn curate(
    task: Task,
    records: &[SongRecord],
    config: &CurationConfig,
    seed: u64,
) -> Result<CuratedDataset> {
    let mut ds = match task {
        Task::Genre => curate_genre_dataset(records, config, seed),
        Task::Success => curate_success_dataset(records, config, seed),
        Task::Year => curate_year_dataset(records, config, seed),
    };
    if !ds.is_empty() {
        assign_splits(&mut ds, &config.splits, seed)?;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, genre: &str, year: i32, views: u64, words: usize) -> SongRecord {
        SongRecord {
            id: format!("{id:06}"),
            title: format!("song {id}"),
            artist: "artist".into(),
            genre: genre.into(),
            year,
            views,
            lyrics: "la ".repeat(words),
            language: "en".into(),
        }
    }

    #[test]
    fn base_filter_boundaries() {
        let cfg = BaseFilterConfig::default();
        let records = vec![
            rec(1, "misc", 2000, 10, 10),
            rec(2, "pop", 1959, 10, 10),
            rec(3, "pop", 1960, 10, 10),
            SongRecord {
                language: "de".into(),
                ..rec(4, "rock", 2000, 10, 10)
            },
        ];
        let kept = apply_base_filters(&records, &cfg);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "000003");
        assert!(apply_base_filters(&[], &cfg).is_empty());
    }

    #[test]
    fn genre_word_threshold_is_strict() {
        let c = GenreCuration::default();
        assert!(!c.admits(&rec(1, "pop", 2000, 5_000, 150)));
        assert!(c.admits(&rec(1, "pop", 2000, 5_000, 151)));
        assert!(!c.admits(&rec(1, "pop", 2000, 999, 151)));
    }

    #[test]
    fn success_labels_at_threshold() {
        let c = SuccessCuration::default();
        assert!(!c.label(99_999));
        assert!(c.label(100_000));
        assert!(c.label(250_000));
    }

    #[test]
    fn genre_short_supply_warns() {
        let mut config = CurationConfig::default();
        config.genre.per_genre_quota = 50;
        let mut records = Vec::new();
        let mut id = 0;
        for g in ["pop", "rock", "rb", "rap"] {
            for _ in 0..80 {
                id += 1;
                records.push(rec(id, g, 2000, 5_000, 200));
            }
        }
        for _ in 0..10 {
            id += 1;
            records.push(rec(id, "country", 2000, 5_000, 200));
        }
        let ds = curate_genre_dataset(&records, &config, 3);
        let counts = ds.label_counts();
        assert_eq!(counts["pop"], 50);
        assert_eq!(counts["country"], 10);
        assert_eq!(ds.len(), 210);
        assert!(ds.warnings.iter().any(|w| w.contains("country")));
    }

    #[test]
    fn duplicate_ids_are_dropped() {
        let r = rec(1, "pop", 2000, 5_000, 200);
        let ds = curate_genre_dataset(&[r.clone(), r], &CurationConfig::default(), 0);
        assert_eq!(ds.len(), 1);
    }

    #[test]
    fn empty_pool_year_dataset_warns_every_year() {
        let ds = curate_year_dataset(&[], &CurationConfig::default(), 0);
        assert!(ds.is_empty());
        assert_eq!(ds.warnings.len(), 63);
    }

    #[test]
    fn cleaned_lyrics_are_stored() {
        let mut r = rec(1, "pop", 2000, 5_000, 200);
        r.lyrics = format!("[Intro]\n{}", r.lyrics);
        let ds = curate_genre_dataset(&[r], &CurationConfig::default(), 0);
        assert!(!ds.entries[0].record.lyrics.contains('['));
    }
}
