use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lexicon::{sentiment_score, tokenize, Lexicon, Stopwords};
use crate::corpus::{clean_lyrics, word_count, Genre, SongRecord};
use crate::error::{Error, Result};

/// Most frequent non-stopword tokens in one genre, ties broken lexicographically.
pub fn top_words(
    records: &[SongRecord],
    genre: &str,
    k: usize,
    stopwords: &Stopwords,
) -> Result<Vec<(String, usize)>> {
    let genre: Genre = genre.parse()?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for r in records.iter().filter(|r| r.genre == genre.as_str()) {
        for t in tokenize(&clean_lyrics(&r.lyrics)) {
            if !stopwords.contains(&t) {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub mean_word_count: f64,
    pub mean_char_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Distribution {
    /// Summary of `values`; quantiles interpolate linearly between order statistics.
    pub fn of(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (values.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
        };
        Some(Self {
            count: values.len(),
            mean: sorted_mean(&values),
            min: values[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: values[values.len() - 1],
        })
    }
}

// Summing in sorted order makes the result independent of input order.
fn sorted_mean(sorted: &[f64]) -> f64 {
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaReport {
    pub records: usize,
    pub genre_counts: BTreeMap<String, usize>,
    pub top_words: BTreeMap<String, Vec<(String, usize)>>,
    pub length_stats: BTreeMap<String, LengthStats>,
    pub sentiment_by_genre: BTreeMap<String, Distribution>,
    pub sentiment_by_year: BTreeMap<i32, f64>,
}

#[derive(Debug, Default)]
struct GenreAcc {
    words: u64,
    chars: u64,
    n: u64,
    sentiments: Vec<f64>,
}

/// Genre distribution, top words, length statistics and sentiment aggregates.
pub fn build_eda_report(
    records: &[SongRecord],
    lexicon: &Lexicon,
    stopwords: &Stopwords,
    top_k: usize,
) -> Result<EdaReport> {
    if records.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut by_genre: BTreeMap<String, GenreAcc> = BTreeMap::new();
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in records {
        let lyrics = clean_lyrics(&r.lyrics);
        let s = sentiment_score(&lyrics, lexicon)?.value();
        let acc = by_genre.entry(r.genre.clone()).or_default();
        acc.words += word_count(&lyrics) as u64;
        acc.chars += lyrics.chars().count() as u64;
        acc.n += 1;
        acc.sentiments.push(s);
        by_year.entry(r.year).or_default().push(s);
    }

    let mut top = BTreeMap::new();
    for g in by_genre.keys() {
        if g.parse::<Genre>().is_ok() {
            top.insert(g.clone(), top_words(records, g, top_k.max(1), stopwords)?);
        }
    }

    Ok(EdaReport {
        records: records.len(),
        genre_counts: by_genre.iter().map(|(g, a)| (g.clone(), a.n as usize)).collect(),
        top_words: top,
        length_stats: by_genre
            .iter()
            .map(|(g, a)| {
                (
                    g.clone(),
                    LengthStats {
                        mean_word_count: a.words as f64 / a.n as f64,
                        mean_char_length: a.chars as f64 / a.n as f64,
                    },
                )
            })
            .collect(),
        sentiment_by_genre: by_genre
            .into_iter()
            .map(|(g, a)| (g, Distribution::of(a.sentiments).expect("non-empty group")))
            .collect(),
        sentiment_by_year: by_year
            .into_iter()
            .map(|(y, mut v)| {
                v.sort_by(f64::total_cmp);
                (y, sorted_mean(&v))
            })
            .collect(),
    })
}

impl EdaReport {
    /// Ordinal observations about the corpus, for logging only.
    pub fn soft_checks(&self) -> Vec<String> {
        let mut notes = Vec::new();
        let by = |f: &dyn Fn(&str) -> Option<f64>| {
            let mut v: Vec<(String, f64)> = self
                .genre_counts
                .keys()
                .filter_map(|g| f(g).map(|x| (g.clone(), x)))
                .collect();
            v.sort_by(|a, b| a.1.total_cmp(&b.1));
            v
        };
        let words = by(&|g| self.length_stats.get(g).map(|s| s.mean_word_count));
        if let (Some(lo), Some(hi)) = (words.first(), words.last()) {
            notes.push(format!(
                "longest lyrics: {} ({:.1} words); shortest: {} ({:.1} words)",
                hi.0, hi.1, lo.0, lo.1
            ));
        }
        let sent = by(&|g| self.sentiment_by_genre.get(g).map(|d| d.mean));
        if let (Some(lo), Some(hi)) = (sent.first(), sent.last()) {
            notes.push(format!(
                "most negative genre: {} ({:.3}); most positive: {} ({:.3})",
                lo.0, lo.1, hi.0, hi.1
            ));
        }
        if let (Some((y0, s0)), Some((y1, s1))) = (
            self.sentiment_by_year.iter().next(),
            self.sentiment_by_year.iter().next_back(),
        ) {
            notes.push(format!("mean sentiment {y0}: {s0:.3}; {y1}: {s1:.3}"));
        }
        notes
    }

    /// Writes one CSV per table plus `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut w = csv::Writer::from_path(dir.join("genre_counts.csv"))?;
        w.write_record(["genre", "count"])?;
        for (g, n) in &self.genre_counts {
            w.write_record([g.as_str(), &n.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let mut w = csv::Writer::from_path(dir.join("top_words.csv"))?;
        w.write_record(["genre", "rank", "word", "count"])?;
        for (g, words) in &self.top_words {
            for (i, (word, n)) in words.iter().enumerate() {
                w.write_record([g.as_str(), &(i + 1).to_string(), word, &n.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let mut w = csv::Writer::from_path(dir.join("length_stats.csv"))?;
        w.write_record(["genre", "mean_word_count", "mean_char_length"])?;
        for (g, s) in &self.length_stats {
            w.write_record([
                g.as_str(),
                &s.mean_word_count.to_string(),
                &s.mean_char_length.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let mut w = csv::Writer::from_path(dir.join("sentiment_by_genre.csv"))?;
        w.write_record(["genre", "count", "mean", "min", "q1", "median", "q3", "max"])?;
        for (g, d) in &self.sentiment_by_genre {
            let cells = [d.mean, d.min, d.q1, d.median, d.q3, d.max].map(|v| v.to_string());
            let mut row = vec![g.clone(), d.count.to_string()];
            row.extend(cells);
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let mut w = csv::Writer::from_path(dir.join("sentiment_by_year.csv"))?;
        w.write_record(["year", "mean_sentiment"])?;
        for (y, s) in &self.sentiment_by_year {
            w.write_record([y.to_string(), s.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rec(id: &str, genre: &str, year: i32, lyrics: &str) -> SongRecord {
        SongRecord {
            id: id.into(),
            title: String::new(),
            artist: String::new(),
            genre: genre.into(),
            year,
            views: 0,
            lyrics: lyrics.into(),
            language: "en".into(),
        }
    }

    #[test]
    fn top_words_basic() {
        let records = [rec("1", "pop", 2000, "a a b")];
        assert_eq!(
            top_words(&records, "pop", 2, &Stopwords::default()).unwrap(),
            vec![("a".to_string(), 2), ("b".to_string(), 1)]
        );
        assert_eq!(top_words(&records, "pop", 10, &Stopwords::default()).unwrap().len(), 2);
    }

    #[test]
    fn top_words_love_dominates_pop() {
        let records = [
            rec("1", "pop", 2000, "love you love me love the night"),
            rec("2", "pop", 2001, "my love is your love baby"),
            rec("3", "rap", 2001, "money money money"),
        ];
        let top = top_words(&records, "pop", 3, &Stopwords::bundled()).unwrap();
        assert_eq!(top[0], ("love".to_string(), 5));
    }

    #[test]
    fn top_words_ties_are_lexicographic() {
        let records = [rec("1", "rock", 2000, "zeta alpha mid")];
        let top = top_words(&records, "rock", 3, &Stopwords::default()).unwrap();
        let words: Vec<_> = top.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, ["alpha", "mid", "zeta"]);
    }

    #[test]
    fn top_words_unknown_genre() {
        assert!(top_words(&[], "polka", 3, &Stopwords::default()).is_err());
        assert!(top_words(&[], "misc", 3, &Stopwords::default()).is_err());
    }

    #[test]
    fn single_record_report() {
        let lex = Lexicon::from_pairs([("love", 1.0), ("cold", -0.5)]).unwrap();
        let r = rec("1", "rb", 1999, "[Intro]\nlove is cold");
        let report = build_eda_report(&[r], &lex, &Stopwords::default(), 5).unwrap();
        assert_eq!(report.genre_counts["rb"], 1);
        assert_eq!(report.length_stats["rb"].mean_word_count, 3.0);
        assert_eq!(report.length_stats["rb"].mean_char_length, 12.0);
        let d = report.sentiment_by_genre["rb"];
        assert_relative_eq!(d.mean, 0.25);
        assert_eq!((d.min, d.median, d.max), (0.25, 0.25, 0.25));
        assert_eq!(report.sentiment_by_year[&1999], 0.25);
    }

    #[test]
    fn empty_dataset_is_error() {
        assert!(build_eda_report(&[], &Lexicon::bundled(), &Stopwords::default(), 5).is_err());
    }

    #[test]
    fn quartiles_interpolate() {
        let d = Distribution::of(vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(d.median, 2.5);
        assert_eq!(d.q1, 1.75);
        assert_eq!(d.q3, 3.25);
    }

    #[test]
    fn writes_tables() {
        let lex = Lexicon::bundled();
        let records = [rec("1", "pop", 2000, "love love"), rec("2", "rap", 2010, "hate")];
        let report = build_eda_report(&records, &lex, &Stopwords::bundled(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        report.write(dir.path()).unwrap();
        for f in [
            "genre_counts.csv",
            "top_words.csv",
            "length_stats.csv",
            "sentiment_by_genre.csv",
            "sentiment_by_year.csv",
            "summary.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(!report.soft_checks().is_empty());
    }
}
