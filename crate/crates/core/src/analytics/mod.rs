//! Exploratory analysis over lyrics: genre mix, vocabulary, lengths and
//! lexicon-based sentiment.

mod eda;
mod lexicon;

pub use eda::{build_eda_report, top_words, Distribution, EdaReport, LengthStats};
pub use lexicon::{sentiment_score, tokenize, Lexicon, SentimentScore, Stopwords};
