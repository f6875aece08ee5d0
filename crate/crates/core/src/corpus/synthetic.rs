//! Deterministic synthetic lyrics corpus with planted signals.
//!
//! Genre keywords, era words tied to the release decade and "hit" words
//! correlated with view counts are mixed into shared filler vocabulary, so
//! every task in the pipeline has something learnable without the real
//! corpus.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::record::SongRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub seed: u64,
}

const TAGS: [(&str, f64); 6] = [
    ("pop", 0.24),
    ("rap", 0.22),
    ("rock", 0.18),
    ("rb", 0.13),
    ("country", 0.13),
    ("misc", 0.10),
];

fn genre_words(tag: &str) -> &'static [&'static str] {
    match tag {
        "pop" => &["dance", "tonight", "party", "shine", "sparkle", "dream", "radio", "summer"],
        "rap" => &["hustle", "block", "flow", "mic", "street", "grind", "cash", "bars"],
        "rock" => &["guitar", "thunder", "highway", "scream", "rebel", "amp", "storm", "wild"],
        "rb" => &["smooth", "honey", "soul", "groove", "velvet", "slow", "silk", "candle"],
        "country" => &["truck", "whiskey", "dirt", "porch", "boots", "river", "fiddle", "barn"],
        _ => &["chapter", "poem", "page", "novel", "essay", "prologue", "reader", "ink"],
    }
}

fn era_words(year: i32) -> &'static [&'static str] {
    match year {
        ..=1969 => &["groovy", "jukebox", "telegram"],
        1970..=1979 => &["disco", "vinyl", "polaroid"],
        1980..=1989 => &["neon", "cassette", "arcade"],
        1990..=1999 => &["pager", "walkman", "grunge"],
        2000..=2009 => &["myspace", "ringtone", "flipphone"],
        2010..=2019 => &["selfie", "snapchat", "hashtag"],
        _ => &["tiktok", "lockdown", "stream"],
    }
}

const HIT_WORDS: [&str; 4] = ["anthem", "legend", "forever", "crown"];

const FILLER: [&str; 32] = [
    "love", "you", "me", "the", "and", "night", "time", "feel", "know", "baby", "heart", "oh",
    "yeah", "i", "we", "my", "your", "go", "come", "way", "life", "day", "never", "want", "light",
    "home", "hold", "say", "all", "in", "on", "up",
];

const FOREIGN: [&str; 8] = ["amor", "corazon", "noche", "liebe", "herz", "nacht", "vida", "sonne"];

fn pick<'a, R: Rng>(rng: &mut R, words: &[&'a str]) -> &'a str {
    words[rng.random_range(0..words.len())]
}

fn pick_tag<R: Rng>(rng: &mut R) -> &'static str {
    let mut u: f64 = rng.random();
    for (tag, w) in TAGS {
        if u < w {
            return tag;
        }
        u -= w;
    }
    TAGS[0].0
}

/// Builds `spec.rows` records; identical specs give identical corpora.
pub fn generate(spec: &SyntheticSpec) -> Vec<SongRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.rows)
        .map(|i| {
            let tag = pick_tag(&mut rng);
            let year = rng.random_range(1950..=2022);
            let log_views: f64 = rng.random_range(1.0..7.0);
            let views = 10f64.powf(log_views).round() as u64;
            let language = match rng.random_range(0..20) {
                0 => "es",
                1 => "de",
                _ => "en",
            };
            let n_words = rng.random_range(60..=320);
            let hit = views >= 100_000;
            let mut lyrics = String::from("[Verse 1]\n");
            for w in 0..n_words {
                if w > 0 && w % 8 == 0 {
                    lyrics.push('\n');
                    if w % 64 == 0 {
                        lyrics.push_str(if (w / 64) % 2 == 1 { "[Chorus]\n" } else { "[Verse]\n" });
                    }
                } else if w > 0 {
                    lyrics.push(' ');
                }
                let u: f64 = rng.random();
                let word = if language != "en" && u < 0.5 {
                    pick(&mut rng, &FOREIGN)
                } else if u < 0.25 {
                    pick(&mut rng, genre_words(tag))
                } else if u < 0.33 {
                    pick(&mut rng, era_words(year))
                } else if hit && u < 0.38 {
                    pick(&mut rng, &HIT_WORDS)
                } else {
                    pick(&mut rng, &FILLER)
                };
                lyrics.push_str(word);
            }
            SongRecord {
                id: format!("s{:07}", i + 1),
                title: format!("Song {}", i + 1),
                artist: format!("Artist {}", rng.random_range(1..=200)),
                genre: tag.to_string(),
                year,
                views,
                lyrics,
                language: language.to_string(),
            }
        })
        .collect()
}

/// Every word the generator can emit, deduplicated, in a stable order.
pub fn vocabulary() -> Vec<&'static str> {
    let mut words: Vec<&'static str> = Vec::new();
    for (tag, _) in TAGS {
        words.extend(genre_words(tag));
    }
    for year in [1960, 1970, 1980, 1990, 2000, 2010, 2020] {
        words.extend(era_words(year));
    }
    words.extend(HIT_WORDS);
    words.extend(FILLER);
    words.extend(FOREIGN);
    let mut seen = std::collections::HashSet::new();
    words.retain(|w| seen.insert(*w));
    words
}

/// Short English lyrics cycling through the five genres, where a third of
/// the words are drawn from the genre's keyword list.
pub fn keyword_fixture(rows: usize, n_words: usize, seed: u64) -> Vec<SongRecord> {
    const GENRES: [&str; 5] = ["country", "pop", "rap", "rb", "rock"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|i| {
            let tag = GENRES[i % GENRES.len()];
            let words: Vec<&str> = (0..n_words)
                .map(|_| {
                    if rng.random::<f64>() < 1.0 / 3.0 {
                        pick(&mut rng, genre_words(tag))
                    } else {
                        pick(&mut rng, &FILLER)
                    }
                })
                .collect();
            SongRecord {
                id: format!("k{:05}", i + 1),
                title: format!("Keyword {}", i + 1),
                artist: format!("Artist {}", i % 7 + 1),
                genre: tag.to_string(),
                year: 2000 + (i % 20) as i32,
                views: 5_000,
                lyrics: words.join(" "),
                language: "en".into(),
            }
        })
        .collect()
}
