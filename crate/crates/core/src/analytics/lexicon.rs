use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../resources/lexicon.tsv");
const DEFAULT_STOPWORDS: &str = include_str!("../../resources/stopwords.txt");

/// Lowercased tokens with punctuation stripped at token boundaries.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(|raw| {
        let t = raw.trim_matches(|c: char| !c.is_alphanumeric());
        (!t.is_empty()).then(|| t.to_lowercase())
    })
}

/// Word-to-polarity table with values in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    polarity: HashMap<String, f64>,
}

impl Lexicon {
    /// Parses `word<TAB>polarity` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut polarity = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, value) = line
                .split_once('\t')
                .ok_or_else(|| Error::Lexicon(format!("line {}: expected word<TAB>polarity", n + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Lexicon(format!("line {}: polarity not a number", n + 1)))?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::Lexicon(format!("line {}: polarity {value} outside [-1, 1]", n + 1)));
            }
            polarity.insert(word.trim().to_lowercase(), value);
        }
        if polarity.is_empty() {
            return Err(Error::Lexicon("lexicon is empty".into()));
        }
        Ok(Self { polarity })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// The bundled general-purpose lexicon.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let text: String = pairs
            .into_iter()
            .map(|(w, p)| format!("{}\t{p}\n", w.into()))
            .collect();
        Self::parse(&text)
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.polarity.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?))
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

/// Lexicon polarity average in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentimentScore(f64);

impl SentimentScore {
    pub fn new(value: f64) -> Self {
        Self(if value.is_finite() { value.clamp(-1.0, 1.0) } else { 0.0 })
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Mean polarity of the lexicon words found in `lyrics`; 0 when none match.
pub fn sentiment_score(lyrics: &str, lexicon: &Lexicon) -> Result<SentimentScore> {
    if lexicon.is_empty() {
        return Err(Error::Lexicon("lexicon is empty".into()));
    }
    let (sum, matched) = tokenize(lyrics)
        .filter_map(|t| lexicon.get(&t))
        .fold((0.0, 0usize), |(s, n), p| (s + p, n + 1));
    Ok(SentimentScore::new(sum / matched.max(1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lex() -> Lexicon {
        Lexicon::from_pairs([("love", 1.0), ("hate", -1.0), ("cold", -0.4), ("sweet", 0.8)]).unwrap()
    }

    #[test]
    fn all_positive_words_score_one() {
        assert_eq!(sentiment_score("love LOVE love!", &lex()).unwrap().value(), 1.0);
    }

    #[test]
    fn empty_lyrics_score_zero() {
        assert_eq!(sentiment_score("", &lex()).unwrap().value(), 0.0);
        assert_eq!(sentiment_score("nothing matches here", &lex()).unwrap().value(), 0.0);
    }

    #[test]
    fn mixed_text_matches_token_oracle() {
        let text = "Sweet, sweet love; but the night is cold and I hate it";
        // matched: sweet .8, sweet .8, love 1, cold -.4, hate -1
        let expected = (0.8 + 0.8 + 1.0 - 0.4 - 1.0) / 5.0;
        assert_relative_eq!(sentiment_score(text, &lex()).unwrap().value(), expected, epsilon = 1e-12);
    }

    #[test]
    fn lexicon_parse_errors() {
        assert!(Lexicon::parse("").is_err());
        assert!(Lexicon::parse("word 0.5\n").is_err());
        assert!(Lexicon::parse("word\tlots\n").is_err());
        assert!(Lexicon::parse("word\t1.5\n").is_err());
        assert_eq!(Lexicon::parse("# c\n\nw\t0.5\r\n").unwrap().get("w"), Some(0.5));
    }

    #[test]
    fn bundled_resources_load() {
        assert!(Lexicon::bundled().len() > 100);
        assert!(Stopwords::bundled().contains("the"));
        assert!(!Stopwords::bundled().contains("love"));
    }

    #[test]
    fn tokenize_strips_boundary_punctuation() {
        let toks: Vec<_> = tokenize("\"Hello,\" (world) don't ...").collect();
        assert_eq!(toks, ["hello", "world", "don't"]);
    }
}
